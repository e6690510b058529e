"""Reference calculations that share no code with the sector pipeline.

The Fock-space Hamiltonian is assembled from explicit Jordan-Wigner
operators as Kronecker products over all 2^L occupations, and reduced
density matrices come from a plain partial trace. Both are only practical
for L <= 12 or so, which is their purpose.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterator

import numpy as np
import scipy.sparse as sp

_A = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
_Z = sp.csr_matrix(np.diag([1.0, -1.0]))
_I = sp.identity(2, format="csr")


def annihilator(j: int, L: int) -> sp.csr_matrix:
    """c_j on 2^L occupations; site k is bit k of the index, string on sites < j."""
    op = sp.identity(1, format="csr")
    for k in range(L - 1, -1, -1):
        f = _A if k == j else (_Z if k < j else _I)
        op = sp.kron(op, f, format="csr")
    return op


def fock_hamiltonian(L: int, t: float, V: float, antiperiodic: bool) -> sp.csr_matrix:
    """t-V ring with c_{j+L} = +c_j (periodic) or -c_j (antiperiodic)."""
    c = [annihilator(j, L) for j in range(L)]
    n = [cj.T @ cj for cj in c]
    H = sp.csr_matrix((2 ** L, 2 ** L))
    for j in range(L):
        k = (j + 1) % L
        b = -1.0 if (k == 0 and antiperiodic) else 1.0
        hop = c[j].T @ c[k]
        H = H - t * b * (hop + hop.T) + V * (n[j] @ n[k])
    return H


def sector_indices(L: int, N: int) -> np.ndarray:
    idx = np.arange(2 ** L)
    pop = np.array([bin(i).count("1") for i in idx])
    return idx[pop == N]


def fock_ground_state(L: int, N: int, t: float, V: float, antiperiodic: bool):
    """(energy, full 2^L vector) of the lowest state with N particles."""
    H = fock_hamiltonian(L, t, V, antiperiodic)
    idx = sector_indices(L, N)
    w, v = np.linalg.eigh(H[idx][:, idx].toarray())
    psi = np.zeros(2 ** L)
    psi[idx] = v[:, 0]
    return float(w[0]), psi


def partial_trace_spectra(psi_full: np.ndarray, L: int, ell: int) -> dict[int, np.ndarray]:
    """Eigenvalues of P_n rho_A P_n for A = sites 0..ell-1, by explicit partial trace."""
    M = np.asarray(psi_full, dtype=float).reshape(2 ** (L - ell), 2 ** ell)
    rho = M.T @ M
    pop = np.array([bin(i).count("1") for i in range(2 ** ell)])
    out = {}
    for n in range(ell + 1):
        sel = np.flatnonzero(pop == n)
        lam = np.linalg.eigvalsh(rho[np.ix_(sel, sel)])
        out[n] = np.sort(np.clip(lam, 0.0, None))[::-1]
    return out


def free_fermion_energy(L: int, N: int, t: float = 1.0, antiperiodic: bool = False) -> float:
    """Sum of the N lowest -2t cos k with k = 2 pi m / L (shifted by pi/L if antiperiodic)."""
    shift = 0.5 if antiperiodic else 0.0
    eps = np.sort([-2.0 * t * math.cos(2 * math.pi * (m + shift) / L) for m in range(L)])
    return float(eps[:N].sum())


# ------------------------------------------------------------------ self-test


def verification_suite() -> Iterator[tuple[str, Callable[[], tuple[bool, str]]]]:
    """Named fast checks of the pipeline against closed forms and oracles."""
    from . import analytic_limits as al
    from .eigensolver import dense_ground_state, lanczos_ground_state
    from .entanglement import accessible_entropy, entropy_report, schmidt_decompose
    from .fock_basis import Boundary, LatticeSpec, enumerate_basis
    from .hamiltonian import ModelParams, build_hamiltonian
    from .number_statistics import poisson_discreteness_error

    def solve(L, N, V, boundary=None, solver="dense"):
        basis = enumerate_basis(LatticeSpec(L, N, boundary))
        H = build_hamiltonian(basis, ModelParams(1.0, V))
        gs = dense_ground_state(H) if solver == "dense" else lanczos_ground_state(H)
        return basis, gs

    def free_fermions():
        worst = 0.0
        for L in range(2, 13):
            for N in range(1, L):
                for bc in (Boundary.PBC, Boundary.APBC):
                    _, gs = solve(L, N, 0.0, bc)
                    ref = free_fermion_energy(L, N, antiperiodic=bc is Boundary.APBC)
                    worst = max(worst, abs(gs.energy - ref))
        return worst < 1e-10, f"max |dE| = {worst:.2e}"

    def flat_state():
        worst = 0.0
        for L in range(4, 11):
            for N in range(1, L):
                basis, gs = solve(L, N, -2.0)
                worst = max(worst, abs(gs.energy + 2 * N))
                for ell in range(1, L):
                    sb = schmidt_decompose(gs, basis, ell)
                    worst = max(worst, accessible_entropy(sb, 2.0),
                                np.abs(sb.P - al.flat_state_Pn(L, N, ell)).max())
        return worst < 1e-8, f"max deviation = {worst:.2e}"

    def fock_space():
        worst = 0.0
        for L, N, V in ((6, 3, 0.7), (7, 3, -1.5), (8, 4, 3.0), (8, 3, -0.4)):
            bc = Boundary.parse(None, N)
            e_ref, psi = fock_ground_state(L, N, 1.0, V, bc is Boundary.APBC)
            basis, gs = solve(L, N, V)
            worst = max(worst, abs(gs.energy - e_ref))
            for ell in range(1, L):
                ref = partial_trace_spectra(psi, L, ell)
                sb = schmidt_decompose(gs, basis, ell)
                for n, lam in ref.items():
                    got = sb.spectrum(n)
                    k = min(got.size, lam.size)
                    worst = max(worst, np.abs(got[:k] - lam[:k]).max(initial=0.0),
                                np.abs(lam[k:]).max(initial=0.0))
        return worst < 1e-10, f"max deviation = {worst:.2e}"

    def lanczos_vs_dense():
        worst = 0.0
        for L, N, V in ((10, 5, 1.0), (12, 6, -1.5), (11, 5, 4.0), (12, 4, 0.3)):
            _, a = solve(L, N, V, solver="dense")
            _, b = solve(L, N, V, solver="lanczos")
            worst = max(worst, abs(a.energy - b.energy))
        return worst < 1e-9, f"max |dE| = {worst:.2e}"

    def strong_coupling():
        L = 12
        basis, gs = solve(L, L // 2, -1e4, solver="lanczos")
        sb = schmidt_decompose(gs, basis, L // 2)
        d1 = abs(accessible_entropy(sb, 1.0) - al.acc_entropy_minus_inf(L, L // 2, L // 2))
        basis, gs = solve(L, L // 2, 1e4, solver="lanczos")
        sb = schmidt_decompose(gs, basis, L // 2)
        d2 = abs(accessible_entropy(sb, 1.0) - al.table1_row("plus_inf", L, L // 2, L // 2)[0])
        return max(d1, d2) < 5e-3, f"|dS_acc| = {d1:.2e}, {d2:.2e}"

    def identities():
        worst = 0.0
        for V in (-1.5, 0.5, 3.0):
            basis, gs = solve(10, 5, V)
            sb = schmidt_decompose(gs, basis, 5)
            for a in (0.5, 1.0, 2.0, 5.0, 10.0):
                rep = entropy_report(sb, a)
                worst = max(worst, abs(rep.deltaS - rep.H_inv_alpha_of_P_alpha))
        return worst < 1e-10, f"max |dS - H_1/a(P_a)| = {worst:.2e}"

    def poisson():
        e = poisson_discreteness_error(0.772)
        return 1e-7 <= e <= 1e-5, f"error(0.772) = {e:.3e}"

    yield "free-fermion energies, L <= 12", free_fermions
    yield "flat state at V = -2t, L <= 10", flat_state
    yield "Fock-space partial trace, L <= 8", fock_space
    yield "Lanczos against dense", lanczos_vs_dense
    yield "strong-coupling limits, L = 12", strong_coupling
    yield "entropy identities", identities
    yield "Poisson discreteness error", poisson
