"""
Error measures, approximation order, energy balance and grid sizing rules.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..errors import DomainError, LengthMismatch, NonUniformGrid
from .oracle import exact_energies
from .potentials import ChirpedSechParams, SignalGrid

logger = logging.getLogger(__name__)

UNIFORM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class OrderMeasurement:
    """Approximation order from the deviations of two grids."""

    m: float
    tau1: float
    tau2: float
    deviation_norms: Tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "deviation_norms": list(self.deviation_norms),
        }


@dataclass(frozen=True)
class EnergyReport:
    """Continuous-spectrum energy against the closed forms."""

    e_c_numeric: float
    e_c_exact: float
    e_d_exact: float
    e_total: float

    @property
    def parseval_residual(self) -> float:
        """|E_c (numeric) + E_d - 2A^2|."""
        return abs(self.e_c_numeric + self.e_d_exact - self.e_total)

    @property
    def relative_error(self) -> float:
        return relative_error(self.e_c_numeric, self.e_c_exact)

    def to_dict(self) -> dict:
        return {
            "e_c_numeric": self.e_c_numeric,
            "e_c_exact": self.e_c_exact,
            "e_d_exact": self.e_d_exact,
            "e_total": self.e_total,
            "parseval_residual": self.parseval_residual,
        }


def _reference_scale(exact: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """|phi_0|: |exact| when it exceeds 1, otherwise 1."""
    magnitude = np.abs(np.asarray(exact))
    return np.where(magnitude > 1, magnitude, 1.0)


def relative_error(computed, exact):
    """|computed - exact| / |phi_0| with phi_0 = exact if |exact| > 1 else 1 (elementwise)."""
    error = np.abs(np.asarray(computed) - np.asarray(exact)) / _reference_scale(exact)
    return float(error) if error.ndim == 0 else error


def mse(computed: npt.ArrayLike, exact: npt.ArrayLike) -> float:
    """
    Mean squared relative error (1/N) sum |computed - exact|^2 / |phi_0|^2.

    Raises:
        LengthMismatch: arrays differ in length
        DomainError: arrays are empty
    """
    computed = np.asarray(computed).ravel()
    exact = np.asarray(exact).ravel()
    if computed.shape != exact.shape:
        raise LengthMismatch(f"Cannot compare {computed.size} values with {exact.size}")
    if computed.size == 0:
        raise DomainError("Mean squared error of an empty grid")
    return float(np.mean(np.abs(computed - exact) ** 2 / _reference_scale(exact) ** 2))


def jost_deviation(computed: npt.ArrayLike, exact: npt.ArrayLike) -> float:
    """Euclidean norm of the difference of two Jost vectors."""
    return float(np.linalg.norm(np.asarray(computed) - np.asarray(exact)))


def approximation_order(dev1: float, dev2: float, tau1: float, tau2: float) -> float:
    """
    m = log(dev1/dev2) / log(tau1/tau2).

    Raises:
        DomainError: a deviation is not positive or tau1 > tau2 > 0 fails
    """
    if not (dev1 > 0 and dev2 > 0):
        raise DomainError(f"Order needs positive deviations, got {dev1}, {dev2}")
    if not (tau1 > tau2 > 0):
        raise DomainError(f"Order needs tau1 > tau2 > 0, got {tau1}, {tau2}")
    return math.log(dev1 / dev2) / math.log(tau1 / tau2)


def order_measurement(dev1: float, dev2: float, tau1: float, tau2: float) -> OrderMeasurement:
    return OrderMeasurement(
        m=approximation_order(dev1, dev2, tau1, tau2), tau1=tau1, tau2=tau2, deviation_norms=(dev1, dev2)
    )


def _uniform_step(grid: npt.NDArray[np.float64]) -> float:
    step = (grid[-1] - grid[0]) / (len(grid) - 1)
    if step <= 0 or np.max(np.abs(np.diff(grid) - step)) > UNIFORM_TOLERANCE * step:
        raise NonUniformGrid("Spectral grid is not uniformly spaced")
    return float(step)


def continuous_energy(a_values: npt.ArrayLike, xi_grid: npt.ArrayLike) -> float:
    """
    E_c = -(1/pi) * integral of ln |a(xi)|^2 by the trapezoid rule.

    Raises:
        NonUniformGrid: xi_grid is not uniformly spaced
        LengthMismatch: a_values and xi_grid differ in length
        DomainError: fewer than 2 points
    """
    a_values = np.asarray(a_values).ravel()
    xi = np.asarray(xi_grid, dtype=np.float64).ravel()
    if a_values.shape != xi.shape:
        raise LengthMismatch(f"{a_values.size} values for {xi.size} grid points")
    if xi.size < 2:
        raise DomainError("Energy quadrature needs at least 2 points")
    step = _uniform_step(xi)
    density = -np.log(np.abs(a_values) ** 2) / np.pi
    return float(np.trapezoid(density, dx=step))


def energy_report(a_values: npt.ArrayLike, xi_grid: npt.ArrayLike, params: ChirpedSechParams) -> EnergyReport:
    """Numeric E_c next to the closed-form split of the chirped secant (sigma = 1)."""
    total, discrete, continuous = exact_energies(params, 1)
    return EnergyReport(
        e_c_numeric=continuous_energy(a_values, xi_grid),
        e_c_exact=continuous,
        e_d_exact=discrete,
        e_total=total,
    )


def parseval_check(signal: SignalGrid, e_c_numeric: float, eigenvalues: Sequence[complex]) -> float:
    """
    Residual |E_c + 4 sum Im(zeta_k) - C0| of the nonlinear Parseval equality.

    C0 is the trapezoid integral of |q|^2 over the signal grid.

    Raises:
        DomainError: the signal has normal dispersion
    """
    if signal.sigma != 1:
        raise DomainError("Parseval equality is only stated for anomalous dispersion (sigma=1)")
    discrete = 4 * float(np.sum(np.imag(np.asarray(eigenvalues, dtype=np.complex128))))
    return abs(e_c_numeric + discrete - signal.energy())


def min_grid_points(length: float, xi_max: float, q_max: float) -> int:
    """M_min = ceil(2 L omega_max / pi), omega_max = sqrt(xi_max^2 + q_max^2)."""
    if length < 0 or xi_max < 0:
        raise DomainError(f"L and xi_max must be non-negative, got {length}, {xi_max}")
    return math.ceil(2 * length * math.hypot(xi_max, q_max) / math.pi)


def spectral_interval(tau: float) -> float:
    """L_xi = pi / (2 tau)."""
    if tau <= 0:
        raise DomainError(f"tau must be positive, got {tau}")
    return math.pi / (2 * tau)


def loglog_slope(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """
    Least-squares slope of log y against log x.

    Non-positive or non-finite y values are skipped.

    Raises:
        DomainError: fewer than two usable points
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    usable = (x > 0) & (y > 0) & np.isfinite(y)
    if np.count_nonzero(usable) < 2:
        raise DomainError("Slope fit needs at least two positive points")
    slope, _ = np.polyfit(np.log(x[usable]), np.log(y[usable]), 1)
    return float(slope)
