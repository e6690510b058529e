import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import solve
from tvacc.analytic_limits import flat_state_Pn
from tvacc.entanglement import entropy_report, schmidt_decompose
from tvacc.number_statistics import (
    FitError,
    bracket_constant,
    chord_length,
    fit_gaussian_center,
    fluctuation_summary,
    gaussian_renyi,
    gaussian_shannon,
    gaussian_shannon_bound,
    gaussian_variance_from_deltaS,
    luttinger_K,
    moments,
    poisson_discreteness_error,
    shannon,
    tll_prediction,
    variance_from_deltaS,
    variance_prediction,
)


def test_moments_examples():
    P = np.zeros(5)
    P[3] = 1.0
    assert moments(P) == (3.0, 0.0)
    L = 10
    mean, var = moments(np.full(L + 1, 1 / (L + 1)))
    assert mean == pytest.approx(L / 2)
    assert var == pytest.approx(L * (L + 2) / 12)


def test_flat_state_variance_trend():
    # hypergeometric variance at half filling approaches L/16
    gaps = [abs(moments(flat_state_Pn(L, L // 2, L // 2))[1] / (L / 16) - 1)
            for L in (8, 10, 12, 14, 16)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.1


def test_gaussian_shannon():
    assert gaussian_shannon(1 / (2 * math.pi * math.e)) == pytest.approx(0.0, abs=1e-15)
    assert gaussian_shannon(0.772) == pytest.approx(1.289, abs=1e-3)
    assert gaussian_shannon_bound(0.0) == pytest.approx(0.5 * math.log(2 * math.pi * math.e / 12))
    with pytest.raises(ValueError):
        gaussian_shannon_bound(-1.0)


@pytest.mark.parametrize("L,N,V", [(10, 5, -1.5), (12, 6, 0.5), (12, 6, 4.0), (11, 5, -1.0)])
def test_shannon_below_bound(L, N, V):
    basis, gs = solve(L, N, V)
    for ell in range(1, L):
        P = schmidt_decompose(gs, basis, ell).P
        assert shannon(P) <= gaussian_shannon_bound(moments(P)[1]) + 1e-12


def test_gaussian_renyi():
    assert gaussian_renyi(1.0, 2.0) == pytest.approx(0.5 * math.log(4 * math.pi))
    assert gaussian_renyi(0.8, 1 + 1e-7) == pytest.approx(gaussian_shannon(0.8), abs=1e-6)
    for a in (0.5, 2.0, 5.0):
        lhs = gaussian_renyi(0.9, a)
        rhs = gaussian_shannon(0.9) - 0.5 * math.log(math.e / a ** (1 / (a - 1)))
        assert lhs == pytest.approx(rhs)
    with pytest.raises(ValueError):
        gaussian_renyi(0.0, 2.0)


def test_poisson_error():
    e = poisson_discreteness_error(0.772)
    assert 1e-7 <= e <= 1e-5
    assert e == pytest.approx(4.8191e-07, rel=1e-4)
    assert poisson_discreteness_error(0.1) == pytest.approx(0.2786, abs=1e-4)
    assert poisson_discreteness_error(5.0) < 1e-40
    assert poisson_discreteness_error(0.1, half_integer_mean=True) < 0.2786
    with pytest.raises(ValueError):
        poisson_discreteness_error(0.0)


def test_luttinger_K():
    assert luttinger_K(0.0) == pytest.approx(1.0)
    assert luttinger_K(2 - 1e-12) == pytest.approx(0.5, abs=1e-5)
    assert luttinger_K(-1.0) == pytest.approx(1.5)
    assert luttinger_K(-1.5) == pytest.approx(math.pi / (2 * math.acos(0.75)))
    for bad in (-2.0, 2.0, 3.0):
        with pytest.raises(ValueError):
            luttinger_K(bad)


def test_variance_prediction():
    assert variance_prediction(1.0, 0.0, 5.0, 10) == 0.0
    assert variance_prediction(1.0, 14, 14, 28) == pytest.approx(
        math.log((7 * math.pi) ** 2 + 1) / (2 * math.pi ** 2))
    assert variance_prediction(1.0, 14, 14, 28) == pytest.approx(0.31325, abs=1e-5)
    K, N, ell, L = 1.2, 1e4, 1e4, 2e4
    big = variance_prediction(K, N, ell, L)
    assert big / (K / math.pi ** 2 * math.log(math.pi * N * ell / L)) == pytest.approx(1, abs=1e-3)
    with pytest.raises(ValueError):
        variance_prediction(0.0, 1, 1, 2)


def test_chord_length():
    assert chord_length(14, 28) == pytest.approx(28 / math.pi)
    assert chord_length(7, 28) == pytest.approx(6.302, abs=1e-3)
    assert chord_length(1e-6, 28) == pytest.approx(1e-6, rel=1e-9)
    with pytest.raises(ValueError):
        chord_length(30, 28)


def test_tll_prediction():
    p = tll_prediction(14, 14, 28, v_over_t=-1.5)
    assert p.K == pytest.approx(luttinger_K(-1.5))
    assert p.chordL == pytest.approx((28 / math.pi, 28 / math.pi))
    with pytest.raises(ValueError):
        tll_prediction(14, 14, 28)


def test_bracket_constant():
    assert bracket_constant(1) == pytest.approx(1 / (math.pi * math.e))
    assert bracket_constant(2) == pytest.approx(1 / (2 * math.pi))
    assert bracket_constant(1 + 1e-8) == pytest.approx(bracket_constant(1), rel=1e-6)
    assert variance_from_deltaS(0.0, 1.0) == pytest.approx(1 / (math.pi * math.e))
    for a in (1.0, 2.0, 3.0):
        # the published constant is twice the Gaussian inverse
        assert variance_from_deltaS(gaussian_renyi(0.6, a), a) == pytest.approx(1.2)
        assert gaussian_variance_from_deltaS(gaussian_renyi(0.6, a), a) == pytest.approx(0.6)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.3, 20.0), st.floats(-0.5, 0.5))
def test_fit_recovers_sampled_gaussian(sigma2, shift):
    n = np.arange(60)
    mu = 30 + shift
    P = np.exp(-(n - mu) ** 2 / (2 * sigma2))
    P /= P.sum()
    m, v = fit_gaussian_center(P, window=7)
    assert v == pytest.approx(sigma2, rel=1e-6)
    assert m == pytest.approx(mu, abs=1e-6)


@pytest.mark.parametrize("L", [12, 14, 16])
def test_fit_on_hypergeometric(L):
    P = flat_state_Pn(L, L // 2, L // 2)
    _, v = fit_gaussian_center(P, window=5)
    assert v == pytest.approx(moments(P)[1], rel=0.06)


def test_fit_failures():
    P = np.zeros(9)
    P[4] = 1.0
    with pytest.raises(FitError):
        fit_gaussian_center(P)
    with pytest.raises(FitError):
        fit_gaussian_center(np.full(9, 1 / 9))
    with pytest.raises(FitError):
        fit_gaussian_center(np.full(9, 1 / 9), window=2)


def test_fluctuation_summary():
    P = flat_state_Pn(12, 6, 6)
    s = fluctuation_summary(P, window=5)
    assert s.mean == pytest.approx(3.0)
    assert s.gauss_shannon == pytest.approx(gaussian_shannon(s.sigma2))
    assert 0 < s.poisson_error < 1


def test_gaussian_entropy_tracks_deltaS_in_liquid():
    errs = []
    for N in (4, 5, 6):
        basis, gs = solve(2 * N, N, -1.5)
        sb = schmidt_decompose(gs, basis, N)
        d = entropy_report(sb, 1.0).deltaS
        errs.append(abs(d - gaussian_shannon(moments(sb.P)[1])))
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("V", [-1.5, -0.5, 0.5, 1.5])
def test_variance_ratio_moves_toward_K(V):
    # sigma^2 / sigma^2_FF lies between 1 and K and approaches K slowly with N;
    # the K-dependent constant in sigma^2 keeps it well away from K at these sizes
    K = luttinger_K(V)
    ratios = []
    for N in (6, 8, 10):
        var = {}
        for v in (V, 0.0):
            basis, gs = solve(2 * N, N, v)
            var[v] = moments(schmidt_decompose(gs, basis, N).P)[1]
        ratios.append(var[V] / var[0.0])
    lo, hi = sorted((1.0, K))
    assert all(lo < r < hi for r in ratios)
    dist = [abs(r - K) for r in ratios]
    assert dist[0] > dist[1] > dist[2]
