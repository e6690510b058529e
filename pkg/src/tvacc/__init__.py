"""Exact diagonalization of the t-V ring and its particle-number resolved entanglement."""

from .analytic_limits import LimitCase, Regime, limit_entropies, table1_row
from .eigensolver import GroundState, ground_state, lanczos_ground_state
from .entanglement import (
    EntropyReport,
    SchmidtBlocks,
    accessible_entropy,
    entropy_report,
    renyi_entropy,
    schmidt_decompose,
)
from .fock_basis import Boundary, LatticeSpec, SectorBasis, enumerate_basis
from .hamiltonian import ModelParams, SparseHamiltonian, build_hamiltonian
from .number_statistics import luttinger_K, poisson_discreteness_error, tll_prediction
from .sweep import SweepRecord, SweepSpec, find_peak, fit_peak_scaling, run_sweep

__version__ = "0.1.0"

__all__ = [
    "Boundary", "EntropyReport", "GroundState", "LatticeSpec", "LimitCase", "ModelParams",
    "Regime", "SchmidtBlocks", "SectorBasis", "SparseHamiltonian", "SweepRecord", "SweepSpec",
    "accessible_entropy", "build_hamiltonian", "enumerate_basis", "entropy_report",
    "find_peak", "fit_peak_scaling", "ground_state", "lanczos_ground_state",
    "limit_entropies", "luttinger_K", "poisson_discreteness_error", "renyi_entropy",
    "run_sweep", "schmidt_decompose", "table1_row", "tll_prediction",
]
