from functools import lru_cache

import pytest

from tvacc.eigensolver import dense_ground_state, lanczos_ground_state
from tvacc.fock_basis import LatticeSpec, enumerate_basis
from tvacc.hamiltonian import ModelParams, build_hamiltonian


@lru_cache(maxsize=None)
def basis_for(L, N, boundary=None):
    return enumerate_basis(LatticeSpec(L, N, boundary))


@lru_cache(maxsize=256)
def solve(L, N, V, boundary=None, solver="auto", t=1.0):
    """(basis, ground state) of the t-V ring, cached across tests."""
    basis = basis_for(L, N, boundary)
    H = build_hamiltonian(basis, ModelParams(t, V))
    if solver == "dense" or (solver == "auto" and basis.dim <= 2000):
        return basis, dense_ground_state(H)
    return basis, lanczos_ground_state(H)


@pytest.fixture
def solver():
    return solve


# criterion number -> (passed, one-line detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {k:2d}: {text}")
