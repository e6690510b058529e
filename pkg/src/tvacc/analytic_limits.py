"""Closed forms for the strong-coupling limits and the V = -2t flat state."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .entanglement import classical_renyi

LN2 = math.log(2.0)


class Regime(str, enum.Enum):
    V_TO_PLUS_INF = "plus_inf"
    V_TO_MINUS_INF = "minus_inf"
    V_EQ_MINUS_2T = "minus_2t"


class LimitDomainError(ValueError):
    """Requested (L, N, ell) lies outside the validity of a closed form."""


@dataclass(frozen=True)
class LimitCase:
    regime: Regime
    L: int
    N: int
    ell: int
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not 1 <= self.ell <= self.L - 1:
            raise LimitDomainError(f"ell={self.ell} outside [1, {self.L - 1}]")
        if self.regime is not Regime.V_TO_PLUS_INF and not 0 < self.N < self.L:
            raise LimitDomainError(f"need 0 < N < L, got N={self.N}, L={self.L}")
        if self.regime is Regime.V_TO_PLUS_INF and 2 * self.N != self.L:
            raise LimitDomainError("the density-wave limit is only tabulated at half filling")


def _need_fill(L: int, N: int) -> None:
    if not 0 < N < L:
        raise LimitDomainError(f"need 0 < N < L, got N={N}, L={L}")


def m_count(L: int, N: int, ell: int) -> int:
    """Sectors with a two-fold entangled projected state in the cluster limit."""
    _need_fill(L, N)
    return min(ell, L - ell, N, L - N) - 1


def acc_entropy_minus_inf(L: int, N: int, ell: int, alpha: float = 1.0) -> float:
    m = m_count(L, N, ell)
    f = 2.0 * m / L
    if alpha == 1:
        return f * LN2
    if math.isinf(alpha):
        # alpha/(1-alpha) -> -1, 2^((1-alpha)/alpha) -> 1/2
        return -math.log(f / 2.0 + 1.0 - f)
    return alpha / (1.0 - alpha) * math.log(f * 2.0 ** ((1.0 - alpha) / alpha) + 1.0 - f)


def rho_spectrum_minus_inf(L: int, N: int, ell: int) -> np.ndarray:
    """Eigenvalues of rho_A for the translation-symmetric cluster state, descending."""
    m = m_count(L, N, ell)
    vals = [1.0 / L] * (2 * m)
    vals += [(abs(ell - N) + 1) / L, (abs(ell + N - L) + 1) / L]
    return np.sort(np.array(vals))[::-1]


def flat_state_Pn(L: int, N: int, ell: int) -> np.ndarray:
    """Hypergeometric P_n, n = 0..N; also the spectrum of rho_A at V = -2t."""
    total = comb(L, N)
    return np.array([comb(ell, n) * comb(L - ell, N - n) / total for n in range(N + 1)])


def rho_spectrum_plus_inf(L: int, N: int, ell: int) -> np.ndarray:
    LimitCase(Regime.V_TO_PLUS_INF, L, N, ell)
    return np.array([0.5, 0.5])


def table1_row(regime: "Regime | str", L: int, N: int, ell: int) -> tuple[float, float]:
    """(S_1^acc, Delta S_1) as tabulated for ell = L/2 contiguous sites.

    The cluster-limit Delta S_1 = ln(L/2) and flat-state Delta S_1 = ln(L)/2
    are large-L asymptotes.
    """
    regime = Regime(regime)
    if regime is Regime.V_TO_PLUS_INF:
        LimitCase(regime, L, N, ell)
        even = ell % 2 == 0
        return (LN2, 0.0) if even else (0.0, LN2)
    if 2 * N != L or 2 * ell != L:
        raise LimitDomainError("tabulated at half filling with ell = L/2")
    if regime is Regime.V_TO_MINUS_INF:
        return ((L - 2) / L * LN2, math.log(L / 2))
    return (0.0, 0.5 * math.log(L))


@dataclass(frozen=True)
class LimitEntropies:
    S: float
    S_acc: float
    deltaS: float
    spectrum: np.ndarray
    Pn: np.ndarray


def limit_entropies(case: LimitCase) -> LimitEntropies:
    """Exact finite-L entropies of the limiting ground state."""
    a = case.alpha
    L, N, ell = case.L, case.N, case.ell
    if case.regime is Regime.V_EQ_MINUS_2T:
        P = flat_state_Pn(L, N, ell)
        S = classical_renyi(P, a)
        return LimitEntropies(S, 0.0, S, np.sort(P[P > 0])[::-1], P)
    if case.regime is Regime.V_TO_MINUS_INF:
        spec = rho_spectrum_minus_inf(L, N, ell)
        S = classical_renyi(spec, a)
        S_acc = acc_entropy_minus_inf(L, N, ell, a)
        return LimitEntropies(S, S_acc, S - S_acc, spec, _cluster_Pn(L, N, ell))
    P = np.zeros(N + 1)
    if ell % 2 == 0:
        P[ell // 2] = 1.0
        S_acc = LN2
    else:
        P[(ell - 1) // 2] = P[(ell + 1) // 2] = 0.5
        S_acc = 0.0
    return LimitEntropies(LN2, S_acc, LN2 - S_acc, np.array([0.5, 0.5]), P)


def _cluster_Pn(L: int, N: int, ell: int) -> np.ndarray:
    """Particle-number distribution of the cluster superposition by counting."""
    P = np.zeros(N + 1)
    for start in range(L):
        n = sum(1 for i in range(N) if (start + i) % L < ell)
        P[n] += 1.0 / L
    return P
