"""Particle-number resolved Schmidt spectra and the entropies built from them.

For a cut after site ``ell - 1`` the ground state splits into sectors with
``n`` particles on the left. Because creation operators are site ordered and
the left region is a prefix of the chain, the coefficients of sector ``n``
reshape directly (no sign corrections) into a matrix indexed by left and
right sub-configurations; its squared singular values are the eigenvalues of
the projected reduced density matrix ``P_n rho_{A_n}``.

Every entropy below is computed from those spectra. ``schmidt_decompose``
drops eigenvalues below ``CUTOFF`` and renormalizes the rest; spectra given
directly are filtered the same way before taking logarithms or powers, and
sectors whose weight is below ``CUTOFF`` carry no conditional entropy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eigensolver import GroundState
from .fock_basis import BipartiteLayout, SectorBasis, translate_vector

CUTOFF = 1e-12
IDENTITY_TOL = 1e-8
GRAM_MIN_SIZE = 512


class InconsistencyError(RuntimeError):
    """Two independent evaluations of the same entropy disagree."""


@dataclass(frozen=True, eq=False)
class SchmidtBlocks:
    """Schmidt spectra of a pure state, one array per left particle number."""

    L: int
    N: int
    ell: int
    sectors: tuple[int, ...]
    spectra: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def P(self) -> np.ndarray:
        """Probability of ``n`` particles in the left region, ``n = 0..N``."""
        P = np.zeros(self.N + 1)
        for n, lam in zip(self.sectors, self.spectra):
            P[n] = lam.sum()
        return P

    @property
    def eigenvalues(self) -> np.ndarray:
        """Full spectrum of rho_A, descending."""
        if not self.spectra:
            return np.zeros(0)
        return np.sort(np.concatenate(self.spectra))[::-1]

    def spectrum(self, n: int) -> np.ndarray:
        for m, lam in zip(self.sectors, self.spectra):
            if m == n:
                return lam
        return np.zeros(0)

    def items(self):
        return zip(self.sectors, self.spectra)

    @classmethod
    def from_spectra(cls, spectra: dict[int, "np.ndarray | list[float]"], L: int, N: int,
                     ell: int) -> "SchmidtBlocks":
        keys = sorted(spectra)
        arrs = tuple(np.sort(np.clip(np.asarray(spectra[n], dtype=float), 0, None))[::-1]
                     for n in keys)
        return cls(L, N, ell, tuple(keys), arrs)


@dataclass(frozen=True)
class EntropyReport:
    alpha: float
    S: float
    S_acc: float
    deltaS: float
    H_alpha: float
    H_inv_alpha_of_P_alpha: float


def _block_spectrum(M: np.ndarray) -> np.ndarray:
    if min(M.shape) == 0:
        return np.zeros(0)
    if min(M.shape) <= GRAM_MIN_SIZE:
        lam = np.linalg.svd(M, compute_uv=False) ** 2
    else:
        G = M @ M.T if M.shape[0] <= M.shape[1] else M.T @ M
        lam = np.linalg.eigvalsh(G)
    lam = np.clip(lam, 0.0, None)
    return np.sort(lam)[::-1]


def schmidt_decompose(gs: "GroundState | np.ndarray", basis: SectorBasis, ell: int,
                      offset: int = 0) -> SchmidtBlocks:
    """Sector-resolved Schmidt spectra for region A = sites offset..offset+ell-1.

    A nonzero ``offset`` translates the state by ``-offset`` sites first, so
    the region is always cut as a prefix.
    """
    L, N = basis.L, basis.N
    if not 1 <= ell <= L - 1:
        raise ValueError(f"subregion size {ell} outside [1, {L - 1}]")
    psi = gs.vector if isinstance(gs, GroundState) else np.asarray(gs, dtype=np.float64)
    if psi.shape != (basis.dim,):
        raise ValueError("state does not match basis dimension")
    if offset % L:
        psi = translate_vector(basis, psi, -offset)
    layout = BipartiteLayout.create(L, N, ell)
    x = layout.to_blocks(basis, psi)
    x /= np.linalg.norm(x)
    spectra = [_block_spectrum(layout.block(x, int(n))) for n in layout.sectors]
    # truncate once and renormalize, so that P_n and every entropy describe the
    # same density matrix; otherwise the dropped weight leaks into S - S_acc
    spectra = [lam[lam >= CUTOFF] for lam in spectra]
    total = sum(float(lam.sum()) for lam in spectra)
    spectra = [lam / total for lam in spectra]
    return SchmidtBlocks(L, N, ell, tuple(int(n) for n in layout.sectors), tuple(spectra))


# ------------------------------------------------------------------ entropies


def _kept(lam: np.ndarray) -> np.ndarray:
    return lam[lam >= CUTOFF]


def _spectral_renyi(lam: np.ndarray, alpha: float) -> float:
    lam = _kept(lam)
    if lam.size == 0:
        return 0.0
    if alpha == 1:
        return float(-np.sum(lam * np.log(lam)))
    return float(np.log(np.sum(lam ** alpha)) / (1.0 - alpha))


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError(f"Renyi index must be positive and finite, got {alpha}")
    return alpha


def renyi_entropy(sb: SchmidtBlocks, alpha: float) -> float:
    """Spatial Renyi entropy S_alpha(rho_A)."""
    alpha = _check_alpha(alpha)
    return _spectral_renyi(sb.eigenvalues, alpha)


def sector_entropies(sb: SchmidtBlocks, alpha: float) -> dict[int, float]:
    """S_alpha of each normalized projected density matrix rho_{A_n}."""
    alpha = _check_alpha(alpha)
    out = {}
    for n, lam in sb.items():
        p = lam.sum()
        if p < CUTOFF:
            continue
        kept = _kept(lam)
        out[n] = _spectral_renyi(kept / p, alpha) if kept.size else 0.0
    return out


def accessible_entropy(sb: SchmidtBlocks, alpha: float) -> float:
    """Entanglement left after projecting onto fixed local particle number.

    alpha = 1: sum_n P_n S_1(rho_{A_n}).
    otherwise: alpha/(1-alpha) ln sum_n P_n exp[(1-alpha)/alpha S_alpha(rho_{A_n})].
    """
    alpha = _check_alpha(alpha)
    P = sb.P
    S_n = sector_entropies(sb, alpha)
    if alpha == 1:
        return float(sum(P[n] * s for n, s in S_n.items()))
    z = (1.0 - alpha) / alpha
    total = sum(P[n] * math.exp(z * s) for n, s in S_n.items())
    return float(math.log(total) / z)


def effective_distribution(sb: SchmidtBlocks, alpha: float) -> np.ndarray:
    """P_{n,alpha} = Tr[P_n rho_A^alpha P_n] / Tr rho_A^alpha; P_{n,1} = P_n."""
    alpha = _check_alpha(alpha)
    if alpha == 1:
        return sb.P
    out = np.zeros(sb.N + 1)
    for n, lam in sb.items():
        out[n] = np.sum(_kept(lam) ** alpha)
    return out / out.sum()


def classical_renyi(P, alpha: float, cutoff: float = CUTOFF) -> float:
    """H_alpha of a probability vector; alpha = 0 counts the support.

    Entries below ``cutoff`` are ignored. Pass ``cutoff=0`` for distributions
    whose small entries matter, e.g. P_{n,alpha} under a power 1/alpha.
    """
    P = np.asarray(P, dtype=float)
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError(f"Renyi index must be non-negative, got {alpha}")
    p = P[P > cutoff] if cutoff == 0 else P[P >= cutoff]
    if p.size == 0:
        return 0.0
    if alpha == 0:
        return math.log(p.size)
    if alpha == 1:
        return float(-np.sum(p * np.log(p)))
    if math.isinf(alpha):
        return float(-math.log(p.max()))
    return float(math.log(np.sum(p ** alpha)) / (1.0 - alpha))


def rescaled_distribution(sb: SchmidtBlocks, alpha: float) -> np.ndarray:
    """A_alpha P_{n,alpha}^(1/alpha), normalized to one."""
    alpha = _check_alpha(alpha)
    q = effective_distribution(sb, alpha) ** (1.0 / alpha)
    return q / q.sum()


def entropy_report(sb: SchmidtBlocks, alpha: float) -> EntropyReport:
    """All entropies for one index; cross-checks S - S_acc = H_{1/alpha}(P_alpha)."""
    alpha = _check_alpha(alpha)
    S = renyi_entropy(sb, alpha)
    S_acc = accessible_entropy(sb, alpha)
    P = sb.P
    # P_alpha is built from retained eigenvalues only; truncating it again
    # would bias H_1/alpha, where tiny entries enter as p^(1/alpha)
    H_inv = classical_renyi(effective_distribution(sb, alpha), 1.0 / alpha, cutoff=0.0)
    delta = S - S_acc
    if abs(delta - H_inv) > IDENTITY_TOL:
        raise InconsistencyError(
            f"alpha={alpha}: S - S_acc = {delta:.15g} but H_1/alpha(P_alpha) = {H_inv:.15g}")
    if not -IDENTITY_TOL <= delta <= math.log(sb.N + 1) + IDENTITY_TOL:
        raise InconsistencyError(f"alpha={alpha}: S - S_acc = {delta:.15g} outside [0, ln(N+1)]")
    return EntropyReport(alpha=alpha, S=S, S_acc=S_acc, deltaS=delta,
                         H_alpha=classical_renyi(P, alpha), H_inv_alpha_of_P_alpha=H_inv)


def dump_spectra(sb: SchmidtBlocks, path: "str | Path") -> Path:
    """Write (n, k, lambda_{n,k}) triples as CSV."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "k", "lambda"])
            for n, lam in sb.items():
                for k, v in enumerate(lam):
                    w.writerow([n, k, f"{v:.17g}"])
    except OSError as exc:
        raise OSError(f"cannot write spectra to {path}: {exc}") from exc
    return path
