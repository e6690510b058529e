import warnings

import numpy as np
import pytest

from tvacc.eigensolver import (
    ConvergenceError,
    DegenerateGroundStateWarning,
    dense_ground_state,
    ground_state,
    lanczos_ground_state,
    start_vector,
)
from tvacc.fock_basis import LatticeSpec, enumerate_basis
from tvacc.hamiltonian import ModelParams, build_hamiltonian
from tvacc.oracles import fock_ground_state


def ham(L, N, V, boundary=None, storage="auto"):
    return build_hamiltonian(enumerate_basis(LatticeSpec(L, N, boundary)), ModelParams(1.0, V),
                             storage)


# frozen from the explicit Fock-space construction
FROZEN = [
    (8, 4, 1.0, "apbc", -4.173988710274753),
    (9, 4, -1.5, "apbc", -7.315447110468855),
    (7, 3, 3.0, "pbc", -3.3478904193465344),
    (10, 5, -1.5, "pbc", -8.97094505292093),
]


@pytest.mark.parametrize("L,N,V,bc,energy", FROZEN)
def test_frozen_energies(L, N, V, bc, energy):
    assert lanczos_ground_state(ham(L, N, V, bc)).energy == pytest.approx(energy, abs=1e-10)
    assert fock_ground_state(L, N, 1.0, V, bc == "apbc")[0] == pytest.approx(energy, abs=1e-12)


@pytest.mark.parametrize("L,N,V", [(10, 5, 0.0), (12, 6, -1.5), (12, 6, 3.0), (13, 4, 1.0),
                                   (14, 7, -0.7), (11, 5, 10.0), (12, 3, -5.0)])
def test_lanczos_matches_dense(L, N, V):
    H = ham(L, N, V)
    d = dense_ground_state(H)
    g = lanczos_ground_state(H)
    assert g.converged and g.residual <= 1e-10
    assert g.energy == pytest.approx(d.energy, abs=1e-9)
    assert g.energy >= d.energy - 1e-9
    assert abs(abs(np.dot(g.vector, d.vector)) - 1.0) < 1e-9


def test_energy_history_monotone():
    g = lanczos_ground_state(ham(14, 7, 0.5))
    assert np.all(np.diff(g.history) <= 1e-12)


def test_two_pass_agrees_with_stored():
    H = ham(16, 8, -1.2, storage="bipartite")
    a = lanczos_ground_state(H, two_pass=False)
    b = lanczos_ground_state(H, two_pass=True)
    assert b.method == "lanczos-2pass"
    assert a.energy == pytest.approx(b.energy, abs=1e-10)
    assert abs(abs(np.dot(a.vector, b.vector)) - 1.0) < 1e-9


def test_small_memory_forces_restarts():
    H = ham(12, 6, 1.0)
    g = lanczos_ground_state(H, memory_limit=8 * H.dim * 30, two_pass=False)
    assert g.energy == pytest.approx(dense_ground_state(H).energy, abs=1e-9)


@pytest.mark.parametrize("N", [0, 5])
def test_one_dimensional_sector(N):
    H = ham(5, N, 2.0)
    g = lanczos_ground_state(H)
    assert g.vector.tolist() == [1.0]
    assert g.energy == H.diagonal[0]


def test_two_site_ring():
    assert ground_state(ham(2, 1, 0.0, "pbc")).energy == pytest.approx(-2.0)


@pytest.mark.parametrize("L,N", [(6, 3), (9, 4), (12, 5), (16, 7)])
def test_flat_state_energy(L, N):
    g = ground_state(ham(L, N, -2.0), "lanczos")
    assert g.energy == pytest.approx(-2 * N, abs=1e-9)


def test_strong_repulsion_close_to_min_diagonal():
    H = ham(10, 5, 1e4)
    g = ground_state(H, "lanczos")
    assert g.energy == pytest.approx(H.diagonal.min(), abs=1e-2)


@pytest.mark.parametrize("V", [-1.9, -1.0, 0.0, 1.0, 1.9])
def test_nondegenerate_below_transition(V):
    for N in (5, 6):
        d = dense_ground_state(ham(2 * N, N, V))
        assert d.gap > 1e-8


def test_ground_state_positive_with_auto_boundary():
    for N in (5, 6):
        v = dense_ground_state(ham(2 * N, N, 0.9)).vector
        v = v * np.sign(v.sum())
        assert v.min() > 0


def test_start_vector_deterministic():
    H = ham(12, 6, 0.0)
    assert np.array_equal(start_vector(H, 3), start_vector(H, 3))
    assert not np.array_equal(start_vector(H, 3), start_vector(H, 4))
    a = lanczos_ground_state(H, seed=7)
    b = lanczos_ground_state(H, seed=7)
    assert np.array_equal(a.vector, b.vector)


def test_iteration_budget_raises_with_best_estimate():
    with pytest.raises(ConvergenceError) as exc:
        lanczos_ground_state(ham(14, 7, 0.3), max_iter=3, tol=1e-14)
    assert not exc.value.best.converged
    assert np.isfinite(exc.value.best.energy)


def test_quasi_degenerate_warning():
    # deep density wave: the two translation partners are split by far less than tol
    H = ham(12, 6, 200.0)
    v0 = np.random.default_rng(1).standard_normal(H.dim)
    with pytest.warns(DegenerateGroundStateWarning):
        try:
            lanczos_ground_state(H, v0=v0, max_iter=300)
        except ConvergenceError:
            pass


def test_symmetric_start_avoids_density_wave_partner():
    H = ham(12, 6, 1e4)
    with warnings.catch_warnings():
        warnings.simplefilter("error", DegenerateGroundStateWarning)
        g = lanczos_ground_state(H)
    assert g.converged


def test_dense_size_guard_and_bad_inputs():
    with pytest.raises(ValueError):
        dense_ground_state(ham(16, 8, 0.0))
    with pytest.raises(ValueError):
        lanczos_ground_state(ham(6, 3, 0.0), tol=0)
    with pytest.raises(ValueError):
        lanczos_ground_state(ham(6, 3, 0.0), v0=np.zeros(20))
    with pytest.raises(ValueError):
        ground_state(ham(6, 3, 0.0), "power")
