"""Gaussian analysis of the subsystem particle-number distribution.

Luttinger-liquid predictions for the variance, the continuous-Gaussian
entropies that go with it, and the Poisson-summation estimate of how far a
discrete Gaussian is from its continuum counterpart.

The subleading variance corrections a1 - a2 (-1)^ell / ell^(2K) are not
modelled; their K-dependent constants are unknown and are not fitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entanglement import CUTOFF, classical_renyi


class FitError(ValueError):
    """Gaussian fit of ln P_n is degenerate (non-negative curvature or too few points)."""


@dataclass(frozen=True)
class FluctuationSummary:
    mean: float
    sigma2: float
    sigma2_fit: float
    gauss_shannon: float
    poisson_error: float


@dataclass(frozen=True)
class TLLPrediction:
    K: float
    sigma2_pred: float
    chordL: tuple[float, float]


def moments(P) -> tuple[float, float]:
    P = np.asarray(P, dtype=float)
    n = np.arange(P.size)
    mean = float(np.dot(n, P))
    var = float(np.dot((n - mean) ** 2, P))
    return mean, max(var, 0.0)


def gaussian_shannon(sigma2: float) -> float:
    """Shannon entropy of a continuous Gaussian, 1/2 ln(2 pi e sigma^2)."""
    return 0.5 * math.log(2 * math.pi * math.e * sigma2)


def gaussian_shannon_bound(sigma2: float) -> float:
    """Upper bound 1/2 ln[2 pi e (sigma^2 + 1/12)] on the Shannon entropy of an integer variable.

    The 1/12 is the variance of a unit-width uniform smoothing and sits inside
    the 2 pi e factor; the form 1/2 ln(2 pi e sigma^2 + 1/12) is not a bound
    (a two-point distribution with sigma^2 = 0.11 already violates it).
    """
    if sigma2 < 0:
        raise ValueError("variance must be non-negative")
    return 0.5 * math.log(2 * math.pi * math.e * (sigma2 + 1.0 / 12.0))


def gaussian_renyi(sigma2: float, alpha: float) -> float:
    """Renyi entropy of a continuous Gaussian with variance ``sigma2``."""
    if sigma2 <= 0 or alpha <= 0:
        raise ValueError("need sigma2 > 0 and alpha > 0")
    if alpha == 1:
        return gaussian_shannon(sigma2)
    return 0.5 * math.log(sigma2) + 0.5 * math.log(2 * math.pi * alpha ** (1.0 / (alpha - 1.0)))


def poisson_discreteness_error(sigma2: float, half_integer_mean: bool = False) -> float:
    """Normalization error of a sampled Gaussian from Poisson summation.

    Integer mean: 2 sum_{d>=1} exp(-2 pi^2 sigma^2 d^2); half-integer mean
    alternates the sign of the terms. The magnitude is returned.
    """
    if sigma2 <= 0:
        raise ValueError("variance must be positive")
    total = 0.0
    d = 1
    while True:
        term = 2.0 * math.exp(-2.0 * math.pi ** 2 * sigma2 * d * d)
        if term < 1e-18:
            break
        total += -term if (half_integer_mean and d % 2) else term
        d += 1
    return abs(total)


def luttinger_K(v_over_t: float) -> float:
    """Luttinger parameter at half filling, pi / (2 arccos(-V / 2t))."""
    if not -2.0 < v_over_t < 2.0:
        raise ValueError(f"K formula only holds for -2 < V/t < 2, got {v_over_t}")
    return math.pi / (2.0 * math.acos(-v_over_t / 2.0))


def chord_length(x: float, L: int) -> float:
    if not 0 <= x <= L:
        raise ValueError(f"x={x} outside [0, {L}]")
    return L / math.pi * math.sin(math.pi * x / L)


def variance_prediction(K: float, N: float, ell: float, L: int) -> float:
    """(K / 2 pi^2) ln[(pi N ell / L)^2 + 1]; pass chord lengths for N, ell on a ring."""
    if K <= 0:
        raise ValueError("K must be positive")
    return K / (2 * math.pi ** 2) * math.log((math.pi * N * ell / L) ** 2 + 1.0)


def tll_prediction(N: int, ell: int, L: int, K: float | None = None,
                   v_over_t: float | None = None, chord: bool = True) -> TLLPrediction:
    """Variance prediction; K from ``v_over_t`` (half filling only) when not given."""
    if K is None:
        if v_over_t is None:
            raise ValueError("give K or v_over_t")
        K = luttinger_K(v_over_t)
    XN, Xl = (chord_length(N, L), chord_length(ell, L)) if chord else (float(N), float(ell))
    return TLLPrediction(K=K, sigma2_pred=variance_prediction(K, XN, Xl, L), chordL=(XN, Xl))


def bracket_constant(alpha: float) -> float:
    """B_alpha = alpha^(1/(1-alpha)) / pi, with B_1 = 1/(pi e)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha == 1:
        return 1.0 / (math.pi * math.e)
    return alpha ** (1.0 / (1.0 - alpha)) / math.pi


def variance_from_deltaS(deltaS: float, alpha: float) -> float:
    """sigma^2 = B_alpha exp(2 deltaS) with the published constant ``bracket_constant``.

    Note that B_alpha is twice the constant obtained by inverting
    ``gaussian_renyi``; for a Gaussian P_n this returns 2 sigma^2. Use
    ``gaussian_variance_from_deltaS`` for the exact inverse.
    """
    return bracket_constant(alpha) * math.exp(2.0 * deltaS)


def gaussian_variance_from_deltaS(deltaS: float, alpha: float) -> float:
    """Exact inverse of ``gaussian_renyi``: alpha^(1/(1-alpha)) / (2 pi) exp(2 deltaS)."""
    return 0.5 * bracket_constant(alpha) * math.exp(2.0 * deltaS)


def fit_gaussian_center(P, window: int | None = None) -> tuple[float, float]:
    """Least-squares fit of ln P_n to a parabola around the mode.

    ``window=None`` uses every point with P_n >= 1e-3 max(P); an integer
    takes that many points centred on the mode.
    """
    P = np.asarray(P, dtype=float)
    mode = int(np.argmax(P))
    if window is None:
        idx = np.flatnonzero(P >= 1e-3 * P[mode])
    else:
        if window < 3:
            raise FitError("window must contain at least 3 points")
        lo = max(0, mode - window // 2)
        hi = min(P.size, lo + window)
        lo = max(0, hi - window)
        idx = np.arange(lo, hi)
    idx = idx[P[idx] > CUTOFF]
    if idx.size < 3:
        raise FitError(f"only {idx.size} usable points around the mode")
    c2, c1, _ = np.polyfit(idx.astype(float), np.log(P[idx]), 2)
    if not c2 < 0:
        raise FitError("fitted curvature is not negative")
    return float(-c1 / (2 * c2)), float(-1.0 / (2 * c2))


def fluctuation_summary(P, window: int | None = None) -> FluctuationSummary:
    mean, var = moments(P)
    try:
        _, var_fit = fit_gaussian_center(P, window)
    except FitError:
        var_fit = float("nan")
    half = abs(mean - round(mean)) > 0.25
    return FluctuationSummary(
        mean=mean,
        sigma2=var,
        sigma2_fit=var_fit,
        gauss_shannon=gaussian_shannon(var) if var > 0 else float("-inf"),
        poisson_error=poisson_discreteness_error(var, half) if var > 0 else float("nan"),
    )


def shannon(P) -> float:
    return classical_renyi(P, 1.0)
