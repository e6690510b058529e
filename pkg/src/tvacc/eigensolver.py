"""Ground state of a sector Hamiltonian.

``lanczos_ground_state`` keeps the full Krylov basis and reorthogonalizes
against it whenever that basis fits in ``memory_limit`` bytes and the sector is
below ``TWO_PASS_MIN_DIM``. Larger sectors fall back to a two-pass Lanczos: the first pass only records the tridiagonal
coefficients, the second regenerates the identical Krylov vectors to
assemble the Ritz vector. Either way the true residual is checked at the end
of every cycle and the iteration restarts from the Ritz vector until it
meets ``tol``.

``dense_ground_state`` diagonalizes the full matrix and is the small-system
oracle for the iterative path.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.linalg import eigh_tridiagonal

from .hamiltonian import SparseHamiltonian

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DENSE_MAX_DIM = 5000
MEMORY_LIMIT = 1 << 30
MIN_STORED_BASIS = 24
TWO_PASS_MIN_DIM = 500_000
CHECK_EVERY = 4


class ConvergenceError(RuntimeError):
    """Lanczos stopped at ``max_iter``; ``best`` holds the last Ritz pair."""

    def __init__(self, message: str, best: "GroundState"):
        super().__init__(message)
        self.best = best


class DegenerateGroundStateWarning(RuntimeWarning):
    pass


@dataclass
class GroundState:
    energy: float
    vector: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    gap: float = float("nan")
    converged: bool = True
    method: str = "lanczos"
    history: np.ndarray = field(default=None, repr=False)


# -------------------------------------------------------------- start vector


@njit(cache=True)
def _splitmix(z):
    z = (z + np.uint64(0x9E3779B97F4A7C15))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _orbit_random(states, L, seed, out):
    # constant on translation orbits -> invariant under the sign-free translation
    mask = (np.int64(1) << L) - 1
    top = L - 1
    for a in range(states.size):
        s = np.int64(states[a])
        rep = s
        r = s
        for _ in range(top):
            r = ((r << 1) | (r >> top)) & mask
            if r < rep:
                rep = r
        h = _splitmix(np.uint64(rep) ^ _splitmix(np.uint64(seed)))
        out[a] = 0.5 + (h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


def start_vector(H: SparseHamiltonian, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-random start vector in ascending basis order.

    With boundary sign +1 every hop amplitude is -t, the ground state is the
    positive Perron vector and it is translation invariant. The start vector
    is then chosen positive and constant on translation orbits, which keeps
    the Krylov space inside the ground-state momentum sector and away from the
    quasi-degenerate partner that appears deep in the density-wave phase.
    """
    basis = H.basis
    if basis.spec.boundary_sign == 1:
        out = np.empty(basis.dim, dtype=np.float64)
        _orbit_random(basis.states, basis.L, seed, out)
        return out
    return np.random.default_rng(seed).standard_normal(basis.dim)


# ------------------------------------------------------------------- helpers


def _lowest(alpha, beta, k):
    """Two lowest eigenpairs of the k x k tridiagonal matrix."""
    if k == 1:
        return np.array([alpha[0]]), np.ones((1, 1))
    hi = min(1, k - 1)
    w, y = eigh_tridiagonal(alpha[:k], beta[:k - 1], select="i", select_range=(0, hi))
    return w, y


def _trivial(H: SparseHamiltonian) -> GroundState:
    e = float(H.diagonal[0])
    return GroundState(energy=e, vector=np.ones(1), residual=0.0, iterations=0,
                       method="trivial", history=np.array([e]))


def _residual(H, psi_native, energy):
    hpsi = H.matvec_native(psi_native)
    hpsi -= energy * psi_native
    return float(np.linalg.norm(hpsi))


# -------------------------------------------------------------------- solvers


def lanczos_ground_state(H: SparseHamiltonian, tol: float = DEFAULT_TOL, seed: int = 0,
                         max_iter: int = 2000, v0: np.ndarray | None = None,
                         memory_limit: int = MEMORY_LIMIT,
                         two_pass: bool | None = None) -> GroundState:
    if tol <= 0:
        raise ValueError("tol must be positive")
    dim = H.dim
    if dim == 1:
        return _trivial(H)
    x = start_vector(H, seed) if v0 is None else np.asarray(v0, dtype=np.float64)
    if x.shape != (dim,):
        raise ValueError(f"start vector has shape {x.shape}, expected ({dim},)")
    x = H.to_native(x)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise ValueError("start vector is zero")
    x /= nrm

    stored = max(2, memory_limit // (8 * dim))
    if two_pass is None:
        # reorthogonalizing against a long basis costs more than the matvec itself
        two_pass = dim >= TWO_PASS_MIN_DIM or (stored < MIN_STORED_BASIS and stored < dim)
    cycle_len = min(max_iter, dim) if two_pass else min(max_iter, dim, stored)

    history: list[float] = []
    used = 0
    gap = float("nan")
    psi, theta, res = x, float(x @ H.matvec_native(x)), np.inf
    first = True
    while True:
        budget = min(cycle_len, max_iter - used)
        if budget < 1:
            break
        run = _cycle_two_pass if two_pass else _cycle_stored
        psi, theta, w, steps = run(H, psi, budget, tol, history)
        used += steps
        if first:
            first = False
            if w.size > 1:
                gap = float(w[1] - w[0])
                if gap < 100 * tol:
                    warnings.warn(
                        f"two lowest Ritz values differ by {gap:.3e} (< 100 tol); "
                        "ground state may be degenerate",
                        DegenerateGroundStateWarning, stacklevel=2)
        res = _residual(H, psi, theta)
        log.debug("lanczos cycle: %d steps, E=%.15g, residual=%.3e", steps, theta, res)
        if res <= tol:
            return GroundState(energy=theta, vector=H.from_native(psi), residual=res,
                               iterations=used, gap=gap,
                               method="lanczos-2pass" if two_pass else "lanczos",
                               history=np.array(history))
    best = GroundState(energy=theta, vector=H.from_native(psi), residual=res,
                       iterations=used, gap=gap, converged=False,
                       method="lanczos-2pass" if two_pass else "lanczos",
                       history=np.array(history))
    raise ConvergenceError(
        f"Lanczos did not reach residual {tol:g} in {max_iter} iterations "
        f"(best residual {res:.3e})", best)


def _cycle_stored(H, x, m, tol, history):
    dim = x.size
    Q = np.empty((m, dim))
    alpha = np.zeros(m)
    beta = np.zeros(m)
    q = x
    w_eig = np.array([0.0])
    y = np.ones((1, 1))
    k = 0
    for k in range(m):
        Q[k] = q
        w = H.matvec_native(q)
        alpha[k] = q @ w
        w -= alpha[k] * q
        if k > 0:
            w -= beta[k - 1] * Q[k - 1]
        for _ in range(2):
            w -= Q[:k + 1].T @ (Q[:k + 1] @ w)
        beta[k] = np.linalg.norm(w)
        w_eig, y = _lowest(alpha, beta, k + 1)
        history.append(float(w_eig[0]))
        if beta[k] * abs(y[k, 0]) < 0.5 * tol or beta[k] < 1e-14 * max(1.0, abs(w_eig[0])):
            break
        q = w / beta[k]
    k += 1
    psi = Q[:k].T @ y[:k, 0]
    psi /= np.linalg.norm(psi)
    return psi, float(w_eig[0]), w_eig, k


def _cycle_two_pass(H, x, m, tol, history):
    dim = x.size
    alpha = np.zeros(m)
    beta = np.zeros(m)
    q_prev = np.zeros(dim)
    q = x.copy()
    w = np.empty(dim)
    w_eig = np.array([0.0])
    y = np.ones((1, 1))
    k = 0
    for k in range(m):
        H.matvec_native(q, w)
        alpha[k] = q @ w
        w -= alpha[k] * q
        if k > 0:
            w -= beta[k - 1] * q_prev
        beta[k] = np.linalg.norm(w)
        if (k + 1) % CHECK_EVERY == 0 or k == m - 1 or beta[k] < 1e-14:
            w_eig, y = _lowest(alpha, beta, k + 1)
            history.append(float(w_eig[0]))
            if beta[k] * abs(y[k, 0]) < 0.5 * tol or beta[k] < 1e-14 * max(1.0, abs(w_eig[0])):
                break
        q_prev, q = q, q_prev
        np.divide(w, beta[k], out=q)
    k += 1
    w_eig, y = _lowest(alpha, beta, k)
    coeff = y[:k, 0]
    # second pass: regenerate the same Krylov vectors
    psi = coeff[0] * x
    q_prev = np.zeros(dim)
    q = x.copy()
    for i in range(k - 1):
        H.matvec_native(q, w)
        w -= alpha[i] * q
        if i > 0:
            w -= beta[i - 1] * q_prev
        q_prev, q = q, q_prev
        np.divide(w, beta[i], out=q)
        psi += coeff[i + 1] * q
    psi /= np.linalg.norm(psi)
    return psi, float(w_eig[0]), w_eig, k


def dense_ground_state(H: SparseHamiltonian, max_dim: int = DENSE_MAX_DIM) -> GroundState:
    if H.dim > max_dim:
        raise ValueError(f"dense solver limited to dim <= {max_dim}, got {H.dim}")
    M = H.to_dense()
    w, v = np.linalg.eigh(M)
    psi = v[:, 0]
    close = np.flatnonzero(w - w[0] <= 1e-9 * max(1.0, abs(w[0])))
    if close.size > 1 and H.basis.spec.boundary_sign == 1:
        # unresolved multiplet (deep in a gapped phase): eigh returns an arbitrary
        # mixture, so pick the translation-invariant member via the symmetric start
        sub = v[:, close]
        psi = sub @ (sub.T @ start_vector(H))
        psi /= np.linalg.norm(psi)
    res = float(np.linalg.norm(M @ psi - w[0] * psi))
    gap = float(w[1] - w[0]) if w.size > 1 else float("nan")
    return GroundState(energy=float(w[0]), vector=psi, residual=res, iterations=1,
                       gap=gap, method="dense", history=np.array([w[0]]))


def ground_state(H: SparseHamiltonian, solver: str = "auto", **kw) -> GroundState:
    """Dispatch on ``solver`` in {'auto', 'lanczos', 'dense'}."""
    if solver == "dense" or (solver == "auto" and H.dim <= 400):
        return dense_ground_state(H)
    if solver not in ("auto", "lanczos"):
        raise ValueError(f"unknown solver {solver!r}")
    return lanczos_ground_state(H, **kw)
