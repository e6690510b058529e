import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from tvacc.cli import main, read_config
from tvacc.sweep import (
    ALPHA_FIELDS,
    BASE_FIELDS,
    PeakError,
    SweepSpec,
    emit,
    emit_distributions,
    find_peak,
    find_record_peak,
    fit_peak_scaling,
    load_records,
    make_grid,
    run_sweep,
)

LN2 = math.log(2)


def sweep(L, N, grid, **kw):
    kw.setdefault("alphas", (1.0, 2.0))
    return run_sweep(SweepSpec(L=L, N=N, ell=kw.pop("ell", L // 2), v_grid=list(grid), **kw))


def test_default_grid():
    g = make_grid(-100, 100, 121)
    assert g.size == 2 * 121 + 2
    assert g[0] == -100 and g[-1] == 100
    assert -2.0 in g and 0.0 in g
    assert np.all(np.diff(g) > 0)
    pos = g[g > 0]
    assert np.allclose(np.diff(np.log(pos)), np.log(pos[1] / pos[0]))


def test_grid_variants():
    assert np.allclose(make_grid(-1, 1, 5, "lin"), [-1, -0.5, 0, 0.5, 1])
    assert np.allclose(make_grid(1, 100, 3), [1, 10, 100])
    assert np.allclose(make_grid(-100, -1, 3), [-100, -10, -1])
    with pytest.raises(ValueError):
        make_grid(1, -1, 3)
    with pytest.raises(ValueError):
        make_grid(-1, 1, 3, "log")
    assert np.allclose(make_grid(0, 1, 3), [0, 0.01, 0.1, 1])


@pytest.mark.parametrize("kw", [dict(v_grid=[]), dict(v_grid=[0.0, 1.0, 0.5]),
                                dict(v_grid=[1.0, 1.0]), dict(ell=0), dict(ell=10),
                                dict(alphas=(0.0,)), dict(format="xml"),
                                dict(solver="qr"), dict(boundary="open")])
def test_spec_validation(kw):
    args = dict(L=10, N=5, ell=5, v_grid=[0.0, 1.0])
    args.update(kw)
    with pytest.raises(ValueError):
        SweepSpec(**args)


def test_descending_grid_is_allowed():
    recs = sweep(8, 4, [1.0, 0.0, -1.0])
    assert [r.V_over_t for r in recs] == [1.0, 0.0, -1.0]


def test_flat_point_and_limits_odd():
    recs = sweep(10, 5, [-100.0, -2.0, 0.0, 100.0], alphas=(1.0, 2.0, 5.0, 10.0))
    for a in (1.0, 2.0, 5.0, 10.0):
        assert recs[1].per_alpha[a].S_acc <= 1e-8
    assert recs[0].per_alpha[1.0].S_acc == pytest.approx(8 / 10 * LN2, abs=0.02)
    assert recs[-1].per_alpha[1.0].S_acc == pytest.approx(0.0, abs=0.02)


def test_even_N_tends_to_ln2():
    recs = sweep(12, 6, [100.0])
    assert recs[0].per_alpha[1.0].S_acc == pytest.approx(LN2, abs=5e-3)
    assert recs[0].boundary == "apbc"


def test_record_invariants():
    for r in sweep(10, 5, make_grid(-10, 10, 4)):
        for a, obs in r.per_alpha.items():
            assert 0 <= obs.deltaS <= math.log(r.N + 1) + 1e-12
            assert obs.S_acc <= obs.S + 1e-12
        assert r.mean_n == pytest.approx(2.5)
        assert r.converged


@pytest.mark.parametrize("N", [8, 9])
def test_single_interior_maximum(N):
    grid = np.round(np.arange(-1.9, 6.01, 0.3), 10)
    S = [r.per_alpha[1.0].S_acc for r in sweep(2 * N, N, grid, alphas=(1.0,))]
    i = int(np.argmax(S))
    assert 0 < i < len(S) - 1
    assert np.all(np.diff(S[:i + 1]) > 0) and np.all(np.diff(S[i:]) < 0)
    vmax = find_peak(grid, S)
    # odd N peaks just above the transition; even N approaches from further out
    assert (2.0 < vmax < 4.0) if N % 2 else (4.0 < vmax < 6.0)


def test_deterministic_output(tmp_path):
    grid = [-1.0, 0.5, 3.0]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    sweep(14, 7, grid, out=str(a), seed=3)
    sweep(14, 7, grid, out=str(b), seed=3)
    assert a.read_bytes() == b.read_bytes()


def test_warm_start_and_workers_agree():
    grid = [-1.0, 0.5, 3.0]
    ref = sweep(14, 7, grid, warm_start=False)
    for other in (sweep(14, 7, grid), sweep(14, 7, grid, workers=2)):
        for r, o in zip(ref, other):
            assert o.V_over_t == r.V_over_t
            assert o.energy == pytest.approx(r.energy, abs=1e-9)
            assert o.per_alpha[1.0].S_acc == pytest.approx(r.per_alpha[1.0].S_acc, abs=1e-8)


def test_non_convergence_is_recorded():
    recs = sweep(14, 7, [0.5, 1.0], solver="lanczos", max_iter=3)
    assert len(recs) == 2
    assert not any(r.converged for r in recs)
    assert all(math.isfinite(r.energy) for r in recs)


def test_find_peak():
    x = np.linspace(0, 4, 9)
    assert find_peak(x, 5 - (x - 1.7) ** 2) == pytest.approx(1.7, abs=1e-12)
    x = np.array([0.0, 0.3, 1.1, 2.0, 2.2])
    assert find_peak(x, -3 * (x - 1.3) ** 2) == pytest.approx(1.3, abs=1e-12)
    with pytest.raises(PeakError):
        find_peak(x, x)
    with pytest.raises(PeakError):
        find_peak(x, np.ones(5))
    with pytest.raises(PeakError):
        find_peak([0, 1], [0, 1])


def test_fit_peak_scaling_exact():
    Ns = [9, 11, 13, 15, 17]
    peaks = [(n, 2 + 1.7 * n ** -0.3) for n in Ns]
    fit = fit_peak_scaling(peaks)
    assert fit.inv_nu == pytest.approx(0.3, abs=1e-10)
    assert fit.A == pytest.approx(1.7, abs=1e-10)
    assert max(map(abs, fit.residuals)) < 1e-10
    assert json.loads(json.dumps(fit.to_dict()))["inv_nu"] == fit.inv_nu


def test_fit_peak_scaling_filters():
    peaks = [(8, 3.0), (9, 2.9), (10, 2.8), (11, 2.85), (13, 2.8), (15, 1.9)]
    with pytest.warns(RuntimeWarning):
        fit = fit_peak_scaling(peaks)
    assert [p[0] for p in fit.peaks] == [9, 11, 13]
    assert fit.excluded == [(15, 1.9)]
    assert [p[0] for p in fit_peak_scaling(peaks[:3] + [(12, 2.7)], "even").peaks] == [8, 10, 12]
    with pytest.raises(ValueError):
        fit_peak_scaling([(9, 2.9), (11, 2.8)])
    with pytest.raises(ValueError):
        fit_peak_scaling(peaks, "prime")


def test_emit_empty_is_header_only(tmp_path):
    p = emit([], tmp_path / "e.csv")
    assert p.read_text().strip() == ",".join(BASE_FIELDS)


def test_csv_and_json_round_trip(tmp_path):
    recs = sweep(10, 5, [-2.0, 0.3], alphas=(1.0, 2.5))
    for fmt in ("csv", "json"):
        path = emit(recs, tmp_path / f"r.{fmt}", fmt)
        back = load_records(path)
        assert [same_row(b.row(), r.row()) for b, r in zip(back, recs)] == [True, True]
    with (tmp_path / "r.csv").open() as fh:
        header = next(csv.reader(fh))
    assert header[:len(BASE_FIELDS)] == BASE_FIELDS
    assert header[len(BASE_FIELDS):len(BASE_FIELDS) + 6] == [f"{k}_a1" for k in ALPHA_FIELDS]
    assert header[-1] == "sigma2_alpha_fit_a2.5"
    rows = json.loads((tmp_path / "r.json").read_text())
    assert rows[1]["V_over_t"] == 0.3 and rows[0]["converged"] is True


def same_row(a, b):
    return a.keys() == b.keys() and all(
        (isinstance(x, float) and math.isnan(x) and math.isnan(y)) or x == y
        for x, y in zip(a.values(), b.values()))


def test_distribution_dump(tmp_path):
    recs = sweep(10, 5, [-2.0, 0.3], alphas=(1.0, 2.0))
    path = emit_distributions(recs, tmp_path / "d.csv")
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["V_over_t", "n", "P_n", "P_n_a1", "rescaled_a1", "P_n_a2",
                             "rescaled_a2"]
    assert len(rows) == 2 * 6
    flat = [r for r in rows if float(r["V_over_t"]) == -2.0]
    for r in flat:
        assert float(r["rescaled_a2"]) == pytest.approx(float(r["P_n"]), abs=1e-10)


def test_emit_reports_path_on_failure(tmp_path):
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        emit([], bad)
    with pytest.raises(OSError, match="missing"):
        emit_distributions([], bad)


def test_find_record_peak(tmp_path):
    grid = np.round(np.arange(2.0, 4.01, 0.25), 10)
    recs = sweep(14, 7, grid, alphas=(1.0,))
    v = find_record_peak(recs)
    path = emit(recs, tmp_path / "n8.csv")
    assert find_record_peak(load_records(path)) == v


# ------------------------------------------------------------------------- CLI


def test_cli_sweep_and_config_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep settings\nL = 8\nN = 4\nv_scale = lin\nv-min = -1\nv_max = 1\n"
                   "v_points = 3\nalpha = 1,2\n")
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(cfg), "--v-points", "5", "--out", str(out),
                 "--dump-distributions", str(tmp_path / "d.csv")]) == 0
    recs = load_records(out)
    assert [r.V_over_t for r in recs] == [-1.0, -0.5, 0.0, 0.5, 1.0]
    assert (tmp_path / "d.csv").exists()
    assert read_config(cfg)[:2] == ["--L", "8"]


def test_cli_sweep_stdout_json(capsys):
    assert main(["sweep", "--L", "6", "--N", "3", "--v-scale", "lin", "--v-min", "0",
                 "--v-max", "1", "--v-points", "2", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 2 and rows[0]["L"] == 6


@pytest.mark.parametrize("argv", [["sweep", "--L", "8"], ["sweep", "--L", "8", "--N", "9"],
                                  ["sweep", "--L", "8", "--N", "4", "--ell", "8"],
                                  ["limits", "--regime", "plus_inf", "--L", "8", "--N", "3",
                                   "--ell", "2"],
                                  ["sweep", "--L", "8", "--N", "4", "--alpha", "x"],
                                  ["sweep", "--L", "40", "--N", "20"],
                                  ["bogus"]])
def test_cli_validation_exit_code(argv, capsys):
    assert main(argv) == 1


def test_cli_solver_failure_exit_code(tmp_path):
    argv = ["sweep", "--L", "14", "--N", "7", "--v-scale", "lin", "--v-min", "0.5",
            "--v-max", "1", "--v-points", "2", "--solver", "lanczos", "--max-iter", "3",
            "--out", str(tmp_path / "x.csv")]
    assert main(argv) == 2
    assert len(load_records(tmp_path / "x.csv")) == 2


def test_cli_limits(capsys):
    assert main(["limits", "--regime", "minus_inf", "--L", "16", "--N", "8", "--ell", "8",
                 "--alpha", "1,2"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["S_acc"] == pytest.approx(14 / 16 * LN2)
    assert rows[0]["m"] == 7
    assert rows[0]["table_deltaS1"] == pytest.approx(math.log(8))
    assert len(rows) == 2


def test_cli_peak(tmp_path, capsys):
    files = []
    for N in (9, 11, 13):
        vmax = 2 + 1.5 * N ** -0.3
        grid = vmax + np.array([-0.2, -0.1, 0.0, 0.1, 0.2])
        lines = ["L,N,ell,boundary,V_over_t,energy,residual,iterations,converged,mean_n,"
                 + ",".join(f"{k}_a1" for k in ALPHA_FIELDS)]
        for v in map(float, grid):
            s = 1 - (v - vmax) ** 2
            lines.append(f"{2 * N},{N},{N},pbc,{v!r},0,0,1,true,0,1,{s!r},0,0,0,0")
        f = tmp_path / f"n{N}.csv"
        f.write_text("\n".join(lines) + "\n")
        files.append(str(f))
    assert main(["peak", *files]) == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["inv_nu"] == pytest.approx(0.3, abs=1e-9)
    out = tmp_path / "fit.json"
    assert main(["peak", *files, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["A"] == pytest.approx(1.5, abs=1e-9)
    assert main(["peak", *files[:2]]) == 1


def test_cli_verify_runs_as_module():
    res = subprocess.run([sys.executable, "-m", "tvacc.cli", "verify"], capture_output=True,
                         text=True, timeout=600)
    assert res.returncode == 0, res.stdout + res.stderr
    lines = res.stdout.strip().splitlines()
    assert len(lines) == 7 and all(line.startswith("PASS") for line in lines)
