"""Command-line entry point: ``tvacc sweep | peak | limits | verify``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

from . import analytic_limits as al
from .eigensolver import ConvergenceError
from .entanglement import InconsistencyError
from .sweep import (
    PeakError,
    SweepSpec,
    emit_json,
    find_record_peak,
    fit_peak_scaling,
    load_records,
    make_grid,
    run_sweep,
    write_records,
)

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 1, 2


def _alphas(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(a) for a in str(text).split(",") if a.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty alpha list")
    return vals


def read_config(path) -> list[str]:
    """Turn a flat ``key = value`` file into argv tokens that precede the real flags."""
    argv: list[str] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        argv += ["--" + key.lstrip("-").replace("_", "-"), value]
    return argv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tvacc",
                                description="Accessible entanglement of the t-V chain")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="ground-state entropies over an interaction grid")
    s.add_argument("--config", help="key = value file; command-line flags override it")
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--ell", type=int, help="subregion size (default L/2)")
    s.add_argument("--boundary", choices=["auto", "pbc", "apbc"], default="auto")
    s.add_argument("--v-min", type=float, default=-100.0)
    s.add_argument("--v-max", type=float, default=100.0)
    s.add_argument("--v-points", type=int, default=121,
                   help="points per sign for geom, total for lin")
    s.add_argument("--v-scale", choices=["lin", "geom"], default="geom")
    s.add_argument("--alpha", type=_alphas, default=(1.0, 2.0), help="e.g. 1,2,5,10")
    s.add_argument("--solver", choices=["auto", "lanczos", "dense"], default="auto")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iter", type=int, default=2000)
    s.add_argument("--out", help="output path (default: CSV on stdout)")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--dump-distributions", metavar="PATH")
    s.add_argument("--workers", type=int, default=1)

    k = sub.add_parser("peak", help="fit V/t|max = 2 + A N^(-1/nu) over sweep files")
    k.add_argument("files", nargs="+", help="sweep CSV or JSON files, one per N")
    k.add_argument("--alpha", type=float, default=1.0)
    k.add_argument("--parity", choices=["odd", "even", "all"], default="odd")
    k.add_argument("--out", help="PeakFit JSON path (default: stdout)")

    m = sub.add_parser("limits", help="closed-form entropies in the limiting regimes")
    m.add_argument("--regime", choices=[r.value for r in al.Regime], required=True)
    m.add_argument("--L", type=int, required=True)
    m.add_argument("--N", type=int, required=True)
    m.add_argument("--ell", type=int, required=True)
    m.add_argument("--alpha", type=_alphas, default=(1.0,))

    sub.add_parser("verify", help="run the analytic-oracle suite")
    return p


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and "sweep" in argv:
        pos = argv.index("sweep") + 1
        argv = argv[:pos] + read_config(known.config) + argv[pos:]
    return build_parser().parse_args(argv)


def _finite(x):
    return x if not (isinstance(x, float) and math.isnan(x)) else None


def cmd_sweep(args) -> int:
    ell = args.ell if args.ell is not None else args.L // 2
    grid = make_grid(args.v_min, args.v_max, args.v_points, args.v_scale)
    spec = SweepSpec(L=args.L, N=args.N, ell=ell, v_grid=list(grid), boundary=args.boundary,
                     alphas=args.alpha, solver=args.solver, tol=args.tol, seed=args.seed,
                     max_iter=args.max_iter, out=args.out, format=args.format,
                     dump_distributions=args.dump_distributions, workers=args.workers)
    t0 = time.perf_counter()
    records = run_sweep(spec)
    if not args.out:
        write_records(records, sys.stdout, args.format)
    bad = [r.V_over_t for r in records if not r.converged]
    logging.info("%d points in %.1f s", len(records), time.perf_counter() - t0)
    if bad:
        logging.error("Lanczos did not converge at V/t = %s", bad)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_peak(args) -> int:
    peaks = []
    for f in args.files:
        recs = load_records(f)
        if not recs:
            raise ValueError(f"{f}: no records")
        peaks.append((recs[0].N, find_record_peak(recs, args.alpha)))
    fit = fit_peak_scaling(peaks, args.parity)
    if args.out:
        emit_json(fit.to_dict(), args.out)
    else:
        print(json.dumps(fit.to_dict(), indent=1))
    return EXIT_OK


def cmd_limits(args) -> int:
    out = []
    for a in args.alpha:
        case = al.LimitCase(args.regime, args.L, args.N, args.ell, a)
        lim = al.limit_entropies(case)
        row = dict(regime=case.regime.value, L=case.L, N=case.N, ell=case.ell, alpha=a,
                   S=lim.S, S_acc=lim.S_acc, deltaS=lim.deltaS,
                   rho_spectrum=[float(x) for x in lim.spectrum],
                   P_n=[float(x) for x in lim.Pn])
        if case.regime is al.Regime.V_TO_MINUS_INF:
            row["m"] = al.m_count(case.L, case.N, case.ell)
        try:
            s1, d1 = al.table1_row(case.regime, case.L, case.N, case.ell)
            row["table_S1_acc"], row["table_deltaS1"] = s1, d1
        except al.LimitDomainError:
            pass
        out.append({k: _finite(v) for k, v in row.items()})
    print(json.dumps(out, indent=1))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .oracles import verification_suite

    failed = 0
    for name, check in verification_suite():
        t0 = time.perf_counter()
        try:
            ok, detail = check()
        except Exception as exc:  # a crash is a failed check, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail}; {time.perf_counter() - t0:.1f} s)",
              flush=True)
    return EXIT_OK if failed == 0 else EXIT_SOLVER


COMMANDS = {"sweep": cmd_sweep, "peak": cmd_peak, "limits": cmd_limits, "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    except (OSError, ValueError) as exc:
        print(f"tvacc: {exc}", file=sys.stderr)
        return EXIT_INVALID
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConvergenceError, InconsistencyError) as exc:
        print(f"tvacc: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, PeakError, OSError) as exc:
        print(f"tvacc: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
