"""Numerical core: 2x2 algebra, potentials, schemes, propagation, oracles and metrics."""

from .linalg2 import ComplexMatrix2, PauliCoefficients, exp_zeta_derivative, mat_exp, pauli_decompose
from .metrics import (
    EnergyReport,
    OrderMeasurement,
    approximation_order,
    continuous_energy,
    min_grid_points,
    mse,
    parseval_check,
    relative_error,
    spectral_interval,
)
from .oracle import (
    DiscreteSpectrum,
    OracleSpectrum,
    exact_ab,
    exact_eigenvalues,
    exact_energies,
    exact_residuals,
    log_gamma,
)
from .potentials import ChirpedSechParams, SignalGrid, chirped_sech, load_signal, q_matrix, save_signal
from .scattering import (
    JostState,
    ScatteringResult,
    b_bidirectional,
    derivative_rk4_romberg,
    propagate,
    propagate_with_derivative,
    residual,
    scan_continuous,
)
from .schemes import NodeStencil, SchemeId

__all__ = [
    "ComplexMatrix2",
    "PauliCoefficients",
    "exp_zeta_derivative",
    "mat_exp",
    "pauli_decompose",
    "EnergyReport",
    "OrderMeasurement",
    "approximation_order",
    "continuous_energy",
    "min_grid_points",
    "mse",
    "parseval_check",
    "relative_error",
    "spectral_interval",
    "DiscreteSpectrum",
    "OracleSpectrum",
    "exact_ab",
    "exact_eigenvalues",
    "exact_energies",
    "exact_residuals",
    "log_gamma",
    "ChirpedSechParams",
    "SignalGrid",
    "chirped_sech",
    "load_signal",
    "q_matrix",
    "save_signal",
    "JostState",
    "ScatteringResult",
    "b_bidirectional",
    "derivative_rk4_romberg",
    "propagate",
    "propagate_with_derivative",
    "residual",
    "scan_continuous",
    "NodeStencil",
    "SchemeId",
]
