"""Interaction sweeps, peak location and finite-size fits, file emission."""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .eigensolver import ConvergenceError, GroundState, ground_state
from .entanglement import (
    effective_distribution,
    entropy_report,
    rescaled_distribution,
    schmidt_decompose,
)
from .fock_basis import Boundary, LatticeSpec, enumerate_basis
from .hamiltonian import ModelParams, build_hamiltonian
from .number_statistics import FitError, fit_gaussian_center, moments

log = logging.getLogger(__name__)

BASE_FIELDS = ["L", "N", "ell", "boundary", "V_over_t", "energy", "residual",
               "iterations", "converged", "mean_n"]
ALPHA_FIELDS = ["S", "S_acc", "deltaS", "H_alpha", "sigma2", "sigma2_alpha_fit"]


class PeakError(ValueError):
    """The grid does not bracket an interior maximum."""


def alpha_label(alpha: float) -> str:
    return f"a{float(alpha):g}"


# --------------------------------------------------------------------- grids


def make_grid(v_min: float, v_max: float, points: int, scale: str = "geom",
              abs_min: float = 0.01, include: tuple[float, ...] = (-2.0, 0.0)) -> np.ndarray:
    """Interaction grid.

    ``lin`` spaces ``points`` values evenly. ``geom`` spaces ``points`` values
    geometrically in |V/t| on each side of zero (from ``abs_min``) and adds the
    ``include`` values that fall inside the range.
    """
    if points < 1:
        raise ValueError("need at least one grid point")
    if v_max < v_min:
        raise ValueError("v_max < v_min")
    if scale == "lin":
        grid = np.linspace(v_min, v_max, points)
    elif scale == "geom":
        if v_min > 0 or v_max < 0:
            if v_min == 0 or v_max == 0:
                raise ValueError("geometric grid cannot end at zero")
            grid = np.geomspace(v_min, v_max, points)
        else:
            parts = []
            if v_min < 0 and -v_min >= abs_min:
                parts.append(-np.geomspace(abs_min, -v_min, points))
            if v_max >= abs_min:
                parts.append(np.geomspace(abs_min, v_max, points))
            parts.append([x for x in include if v_min <= x <= v_max])
            grid = np.concatenate([np.asarray(p, dtype=float) for p in parts])
    else:
        raise ValueError(f"unknown grid scale {scale!r}")
    return np.unique(np.round(grid, 14))


# --------------------------------------------------------------------- types


@dataclass
class SweepSpec:
    L: int
    N: int
    ell: int
    v_grid: list[float]
    boundary: str = "auto"
    alphas: tuple[float, ...] = (1.0, 2.0)
    solver: str = "auto"
    tol: float = 1e-10
    seed: int = 0
    max_iter: int = 2000
    t: float = 1.0
    out: str | None = None
    format: str = "csv"
    dump_distributions: str | None = None
    workers: int = 1
    warm_start: bool = True

    def __post_init__(self):
        LatticeSpec(self.L, self.N, Boundary.parse(self.boundary, self.N))
        if not 1 <= self.ell <= self.L - 1:
            raise ValueError(f"ell={self.ell} outside [1, {self.L - 1}]")
        g = np.asarray(self.v_grid, dtype=float)
        if g.size == 0:
            raise ValueError("empty interaction grid")
        d = np.diff(g)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("interaction grid must be strictly monotone")
        self.v_grid = [float(v) for v in g]
        if not self.alphas or any(a <= 0 for a in self.alphas):
            raise ValueError("Renyi indices must be positive")
        self.alphas = tuple(float(a) for a in self.alphas)
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.solver not in ("auto", "lanczos", "dense"):
            raise ValueError(f"unknown solver {self.solver!r}")

    @property
    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.L, self.N, Boundary.parse(self.boundary, self.N))


@dataclass
class AlphaObservables:
    S: float
    S_acc: float
    deltaS: float
    H_alpha: float
    sigma2: float
    sigma2_alpha_fit: float


@dataclass
class SweepRecord:
    L: int
    N: int
    ell: int
    boundary: str
    V_over_t: float
    energy: float
    residual: float
    iterations: int
    converged: bool
    mean_n: float
    per_alpha: dict[float, AlphaObservables] = field(default_factory=dict)
    P: np.ndarray | None = field(default=None, repr=False, compare=False)
    P_alpha: dict[float, np.ndarray] = field(default_factory=dict, repr=False, compare=False)
    rescaled: dict[float, np.ndarray] = field(default_factory=dict, repr=False, compare=False)

    def row(self) -> dict:
        out = {k: getattr(self, k) for k in BASE_FIELDS}
        for a, obs in self.per_alpha.items():
            lab = alpha_label(a)
            for k in ALPHA_FIELDS:
                out[f"{k}_{lab}"] = getattr(obs, k)
        return out

    @classmethod
    def from_row(cls, row: dict) -> "SweepRecord":
        alphas: dict[str, dict] = {}
        for key, val in row.items():
            for k in ALPHA_FIELDS:
                prefix = k + "_a"
                if key.startswith(prefix) and not any(
                        key.startswith(o + "_a") and len(o) > len(k) for o in ALPHA_FIELDS):
                    alphas.setdefault(key[len(prefix):], {})[k] = float(val)
        per_alpha = {float(a): AlphaObservables(**v) for a, v in alphas.items()}
        conv = row["converged"]
        if isinstance(conv, str):
            conv = conv.lower() == "true"
        return cls(L=int(row["L"]), N=int(row["N"]), ell=int(row["ell"]),
                   boundary=str(row["boundary"]), V_over_t=float(row["V_over_t"]),
                   energy=float(row["energy"]), residual=float(row["residual"]),
                   iterations=int(row["iterations"]), converged=bool(conv),
                   mean_n=float(row["mean_n"]), per_alpha=per_alpha)


@dataclass
class PeakFit:
    peaks: list[tuple[int, float]]
    A: float
    inv_nu: float
    residuals: list[float]
    excluded: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------- sweep


def observe(gs: GroundState, basis, ell: int, alphas, V: float) -> SweepRecord:
    """Entropies and distributions of one ground state."""
    sb = schmidt_decompose(gs, basis, ell)
    P = sb.P
    mean, _ = moments(P)
    rec = SweepRecord(L=basis.L, N=basis.N, ell=ell, boundary=basis.spec.boundary.value,
                      V_over_t=float(V), energy=gs.energy, residual=gs.residual,
                      iterations=gs.iterations, converged=gs.converged, mean_n=mean, P=P)
    for a in alphas:
        rep = entropy_report(sb, a)
        Pa = effective_distribution(sb, a)
        _, var = moments(Pa)
        try:
            _, var_fit = fit_gaussian_center(Pa)
        except FitError:
            var_fit = float("nan")
        rec.per_alpha[a] = AlphaObservables(S=rep.S, S_acc=rep.S_acc, deltaS=rep.deltaS,
                                            H_alpha=rep.H_alpha, sigma2=var,
                                            sigma2_alpha_fit=var_fit)
        rec.P_alpha[a] = Pa
        rec.rescaled[a] = rescaled_distribution(sb, a)
    return rec


def solve_point(spec: SweepSpec, V: float, basis=None, v0=None) -> tuple[SweepRecord, GroundState]:
    basis = basis if basis is not None else enumerate_basis(spec.lattice)
    H = build_hamiltonian(basis, ModelParams(t=spec.t, V=V * spec.t))
    kw = {} if spec.solver == "dense" else dict(tol=spec.tol, seed=spec.seed,
                                                 max_iter=spec.max_iter, v0=v0)
    try:
        gs = ground_state(H, spec.solver, **kw)
    except ConvergenceError as exc:
        log.warning("V/t=%g: %s", V, exc)
        gs = exc.best
    return observe(gs, basis, spec.ell, spec.alphas, V), gs


def _solve_detached(args):
    spec, V = args
    rec, _ = solve_point(spec, V)
    return rec


def run_sweep(spec: SweepSpec) -> list[SweepRecord]:
    """One record per grid point, ordered as the grid; writes configured outputs."""
    records: list[SweepRecord] = []
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_solve_detached, [(spec, V) for V in spec.v_grid]))
    else:
        basis = enumerate_basis(spec.lattice)
        prev = None
        for V in spec.v_grid:
            rec, gs = solve_point(spec, V, basis, prev if spec.warm_start else None)
            prev = gs.vector if gs.converged else None
            log.info("V/t=%-10g E=%.12g S1acc=%s", V, rec.energy,
                     rec.per_alpha.get(1.0, None) and rec.per_alpha[1.0].S_acc)
            records.append(rec)
    if spec.out:
        emit(records, spec.out, spec.format)
    if spec.dump_distributions:
        emit_distributions(records, spec.dump_distributions)
    return records


# ---------------------------------------------------------------------- peaks


def find_peak(V, S) -> float:
    """Vertex of the parabola through the grid maximum and its two neighbours."""
    V = np.asarray(V, dtype=float)
    S = np.asarray(S, dtype=float)
    if V.size < 3:
        raise PeakError("need at least three grid points")
    order = np.argsort(V)
    V, S = V[order], S[order]
    i = int(np.argmax(S))
    if i == 0 or i == V.size - 1:
        raise PeakError(f"maximum at grid edge V/t={V[i]:g}; widen the grid")
    if not (S[i - 1] < S[i] and S[i + 1] < S[i]):
        raise PeakError("flat maximum; the grid does not resolve a peak")
    x0, x1, x2 = V[i - 1:i + 2]
    y0, y1, y2 = S[i - 1:i + 2]
    num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    return float(x1 - 0.5 * num / den)


def find_record_peak(records: list[SweepRecord], alpha: float = 1.0) -> float:
    V = [r.V_over_t for r in records]
    S = [r.per_alpha[float(alpha)].S_acc for r in records]
    return find_peak(V, S)


def refine_peak(L: int, N: int, ell: int, v_lo: float = 2.0, v_hi: float = 5.0,
                coarse: float = 0.25, fine: float = 0.05, alpha: float = 1.0,
                **spec_kw) -> tuple[float, list[SweepRecord]]:
    """Coarse scan of S_acc on [v_lo, v_hi], then a fine scan around its maximum."""
    grid = np.round(np.arange(v_lo, v_hi + 0.5 * coarse, coarse), 12)
    spec = SweepSpec(L=L, N=N, ell=ell, v_grid=list(grid), alphas=(alpha,), **spec_kw)
    recs = run_sweep(spec)
    S = [r.per_alpha[float(alpha)].S_acc for r in recs]
    i = int(np.argmax(S))
    if i == 0 or i == len(recs) - 1:
        raise PeakError(f"maximum at scan edge V/t={grid[i]:g}")
    fine_grid = np.round(np.arange(grid[i - 1] + fine, grid[i + 1] - 0.5 * fine, fine), 12)
    fine_grid = fine_grid[np.abs(fine_grid - grid[i]) > 1e-9]
    spec2 = SweepSpec(L=L, N=N, ell=ell, v_grid=list(fine_grid), alphas=(alpha,), **spec_kw)
    recs = sorted(recs + run_sweep(spec2), key=lambda r: r.V_over_t)
    return find_record_peak(recs, alpha), recs


def fit_peak_scaling(peaks, parity: str = "odd") -> PeakFit:
    """Least squares of ln(V_max - 2) = ln A - (1/nu) ln N."""
    pts = [(int(n), float(v)) for n, v in peaks]
    if parity == "odd":
        pts = [p for p in pts if p[0] % 2 == 1]
    elif parity == "even":
        pts = [p for p in pts if p[0] % 2 == 0]
    elif parity != "all":
        raise ValueError(f"unknown parity filter {parity!r}")
    excluded = [p for p in pts if p[1] <= 2.0]
    if excluded:
        warnings.warn(f"peaks at or below V/t = 2 excluded from the fit: {excluded}",
                      RuntimeWarning, stacklevel=2)
    pts = sorted(p for p in pts if p[1] > 2.0)
    if len(pts) < 3:
        raise ValueError(f"need at least three system sizes, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] - 2.0 for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    return PeakFit(peaks=pts, A=float(math.exp(intercept)), inv_nu=float(-slope),
                   residuals=[float(r) for r in resid], excluded=excluded)


# ------------------------------------------------------------------- emission


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _header(records: list[SweepRecord], alphas=None) -> list[str]:
    if alphas is None:
        alphas = list(records[0].per_alpha) if records else []
    cols = list(BASE_FIELDS)
    for a in alphas:
        cols += [f"{k}_{alpha_label(a)}" for k in ALPHA_FIELDS]
    return cols


def write_records(records: list[SweepRecord], fh, format: str = "csv", alphas=None) -> None:
    """Serialize records to an open text stream."""
    if format == "csv":
        cols = _header(records, alphas)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            row = r.row()
            w.writerow([_fmt(row[c]) for c in cols])
    elif format == "json":
        json.dump([r.row() for r in records], fh, indent=1)
        fh.write("\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def emit(records: list[SweepRecord], path, format: str = "csv", alphas=None) -> Path:
    """CSV (fixed column order, 17 significant digits) or JSON list of row objects."""
    if format not in ("csv", "json"):
        raise ValueError(f"unknown format {format!r}")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            write_records(records, fh, format, alphas)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def emit_distributions(records: list[SweepRecord], path) -> Path:
    """Per grid point and n: P_n, then P_{n,alpha} and A_alpha P_{n,alpha}^(1/alpha) per alpha."""
    path = Path(path)
    alphas = list(records[0].per_alpha) if records else []
    cols = ["V_over_t", "n", "P_n"]
    for a in alphas:
        cols += [f"P_n_{alpha_label(a)}", f"rescaled_{alpha_label(a)}"]
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in records:
                for n in range(r.N + 1):
                    row = [_fmt(r.V_over_t), n, _fmt(r.P[n])]
                    for a in alphas:
                        row += [_fmt(r.P_alpha[a][n]), _fmt(r.rescaled[a][n])]
                    w.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def emit_json(obj, path) -> Path:
    path = Path(path)
    try:
        with path.open("w") as fh:
            json.dump(obj, fh, indent=1)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def load_records(path) -> list[SweepRecord]:
    path = Path(path)
    if path.suffix == ".json":
        with path.open() as fh:
            rows = json.load(fh)
    else:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    return [SweepRecord.from_row(r) for r in rows]
