"""
Closed-form spectral data of the chirped hyperbolic secant.

a, b, the discrete eigenvalues, the phase coefficients and the energy split
are expressed through the complex Gamma function. All Gamma ratios are formed
in log space and exponentiated once, so amplitudes above 5 and spectral
parameters far from the origin do not overflow.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import numpy.typing as npt

from ..errors import DomainError, NoDiscreteSpectrum, PoleError
from .linalg2 import ComplexLike
from .potentials import ChirpedSechParams

logger = logging.getLogger(__name__)

# Lanczos approximation, g = 671/128 with 15 coefficients
LANCZOS_G = 671.0 / 128.0
LANCZOS_C0 = 0.999999999999997092
LANCZOS_COEFFICIENTS = np.array(
    [
        57.1562356658629235,
        -59.5979603554754912,
        14.1360979747417471,
        -0.491913816097620199,
        0.339946499848118887e-4,
        0.465236289270485756e-4,
        -0.983744753048795646e-4,
        0.158088703224912494e-3,
        -0.210264441724104883e-3,
        0.217439618115212643e-3,
        -0.164318106536763890e-3,
        0.844182239838527433e-4,
        -0.261908384015814087e-4,
        0.368991826595316234e-5,
    ]
)
LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
POLE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class OracleSpectrum:
    """Exact a(zeta), b(zeta) at the given spectral parameter(s)."""

    a: ComplexLike
    b: ComplexLike
    zeta: ComplexLike


@dataclass(frozen=True)
class DiscreteSpectrum:
    """Eigenvalues, phase coefficients and energy split of the chirped secant."""

    eigenvalues: npt.NDArray[np.complex128]
    residuals: npt.NDArray[np.complex128]
    b_values: npt.NDArray[np.complex128]
    energy_total: float
    energy_discrete: float
    energy_continuous: float

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "residuals": [[r.real, r.imag] for r in self.residuals],
            "b_values": [[b.real, b.imag] for b in self.b_values],
            "energy_total": self.energy_total,
            "energy_discrete": self.energy_discrete,
            "energy_continuous": self.energy_continuous,
        }


def _pole_mask(z: npt.NDArray[np.complex128]) -> npt.NDArray[np.bool_]:
    nearest = np.round(z.real)
    return (np.abs(z.imag) < POLE_TOLERANCE) & (np.abs(z.real - nearest) < POLE_TOLERANCE) & (nearest <= 0)


def _lanczos(z: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """ln Gamma(z) for Re z >= 1/2."""
    series = np.full(z.shape, LANCZOS_C0, dtype=np.complex128)
    for j, coefficient in enumerate(LANCZOS_COEFFICIENTS):
        series = series + coefficient / (z + j + 1)
    shifted = z + LANCZOS_G
    return (z + 0.5) * np.log(shifted) - shifted + np.log(series) + LOG_SQRT_2PI - np.log(z)


def _log_sin_pi(z: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """ln sin(pi z) without overflow of e^{pi |Im z|} (modulo 2 pi i)."""
    w = np.pi * z
    upper = -1j * w + np.log((np.exp(2j * w) - 1) / 2j)
    lower = 1j * w + np.log((1 - np.exp(-2j * w)) / 2j)
    return np.where(z.imag >= 0, upper, lower)


def _log_gamma_masked(z: npt.ArrayLike) -> Tuple[npt.NDArray[np.complex128], npt.NDArray[np.bool_]]:
    """ln Gamma(z) and the mask of poles (values at poles are undefined)."""
    z = np.asarray(z, dtype=np.complex128)
    poles = _pole_mask(z)
    reflect = z.real < 0.5
    with np.errstate(all="ignore"):
        direct = _lanczos(np.where(reflect, 1 - z, z))
        reflected = np.log(np.pi) - _log_sin_pi(z) - direct
        reflected = reflected.real + 1j * np.angle(np.exp(1j * reflected.imag))
    return np.where(reflect, reflected, direct), poles


def log_gamma(z: ComplexLike) -> ComplexLike:
    """
    ln Gamma(z) by the Lanczos approximation.

    For Re z >= 1/2 this is the principal branch of ln Gamma. For Re z < 1/2
    the reflection formula is used and the imaginary part is reduced to
    (-pi, pi], i.e. the principal logarithm of Gamma(z).

    Raises:
        PoleError: z is a nonpositive integer
    """
    values, poles = _log_gamma_masked(z)
    if np.any(poles):
        raise PoleError(f"Gamma has a pole at {np.asarray(z)[poles]}")
    return values if values.ndim else complex(values)


def _detuning(params: ChirpedSechParams, sigma: int) -> complex:
    """D = sqrt(sigma A^2 - C^2/4), principal branch."""
    return complex(np.sqrt(complex(sigma * params.amplitude ** 2 - params.chirp ** 2 / 4)))


def _log_numerator(zeta: npt.NDArray[np.complex128], chirp: float) -> npt.NDArray[np.complex128]:
    """ln Gamma[1/2 - i(zeta + C/2)] + ln Gamma[1/2 - i(zeta - C/2)]."""
    return log_gamma(0.5 - 1j * (zeta + chirp / 2)) + log_gamma(0.5 - 1j * (zeta - chirp / 2))


def _log_b_numerator(zeta: npt.NDArray[np.complex128], chirp: float) -> npt.NDArray[np.complex128]:
    """ln Gamma[1/2 - i(zeta + C/2)] + ln Gamma[1/2 + i(zeta - C/2)]."""
    return log_gamma(0.5 - 1j * (zeta + chirp / 2)) + log_gamma(0.5 + 1j * (zeta - chirp / 2))


def _sech(w: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """1 / cosh(w) from the decaying exponential only."""
    s = np.where(w.real >= 0, 1.0, -1.0)
    decay = np.exp(-s * w)
    return 2 * decay / (1 + decay ** 2)


def _b_unchirped(zeta: npt.NDArray[np.complex128], d: complex, amplitude: float) -> npt.NDArray[np.complex128]:
    """
    b = -D sin(pi D) sech(pi zeta) / A for C = 0.

    At zeta_k = i(D - 1/2 - k) the ratio sin(pi D) / cosh(pi zeta_k) is
    (-1)^k, so b(zeta_k) = (-1)^(k+1) D / A. For integer D both factors vanish
    and the limit is substituted.
    """
    with np.errstate(all="ignore"):
        b = -d * np.sin(np.pi * d) * _sech(np.pi * zeta) / amplitude
    if abs(d.imag) < POLE_TOLERANCE and abs(d.real - round(d.real)) < POLE_TOLERANCE:
        k = d.real - 0.5 - zeta.imag
        at_eigenvalue = (np.abs(zeta.real) < POLE_TOLERANCE) & (np.abs(k - np.round(k)) < POLE_TOLERANCE) & (k > -0.5)
        sign = np.where(np.round(k) % 2 == 0, -1.0, 1.0)
        b = np.where(at_eigenvalue, sign * d / amplitude, b)
    return b


def exact_ab(zeta: ComplexLike, params: ChirpedSechParams, sigma: int = 1) -> OracleSpectrum:
    """
    Exact scattering coefficients of the chirped secant.

    a = G(1/2-i(z+C/2)) G(1/2-i(z-C/2)) / (G(1/2-iz-D) G(1/2-iz+D))
    b = 2^{-iC}/A G(1/2-i(z+C/2)) G(1/2+i(z-C/2)) / (G(-iC/2-D) G(-iC/2+D))

    b is fixed by the propagation convention: for small A it tends to
    -sigma * integral of q* e^{-2i z t} dt, and for C = 0 it reduces to
    -D sin(pi D) / (A cosh(pi z)), real on the real axis and (-1)^(k+1) at
    the eigenvalues. A pole of a denominator Gamma makes the coefficient
    vanish; a zero of a at an eigenvalue comes out exactly 0.

    Raises:
        PoleError: a numerator Gamma is evaluated at a pole
    """
    scalar = np.ndim(zeta) == 0
    zeta_arr = np.atleast_1d(np.asarray(zeta, dtype=np.complex128))

    if params.amplitude == 0:
        a = np.ones_like(zeta_arr)
        b = np.zeros_like(zeta_arr)
    else:
        d = _detuning(params, sigma)
        chirp = params.chirp
        log_num = _log_numerator(zeta_arr, chirp)

        den_a1, pole_a1 = _log_gamma_masked(0.5 - 1j * zeta_arr - d)
        den_a2, pole_a2 = _log_gamma_masked(0.5 - 1j * zeta_arr + d)
        a_vanishes = pole_a1 | pole_a2
        with np.errstate(all="ignore"):
            a = np.where(a_vanishes, 0j, np.exp(log_num - den_a1 - den_a2))

        den_b1, pole_b1 = _log_gamma_masked(np.array([-0.5j * chirp - d]))
        den_b2, pole_b2 = _log_gamma_masked(np.array([-0.5j * chirp + d]))
        if chirp == 0:
            # G(1/2-iz) G(1/2+iz) = pi sech(pi z) and G(-D) G(D) = -pi / (D sin(pi D))
            b = _b_unchirped(zeta_arr, d, params.amplitude)
        elif pole_b1[0] or pole_b2[0]:
            b = np.zeros_like(zeta_arr)
        else:
            log_b = _log_b_numerator(zeta_arr, chirp) - den_b1[0] - den_b2[0] - 1j * chirp * math.log(2.0)
            b = np.exp(log_b) / params.amplitude

    if scalar:
        return OracleSpectrum(a=complex(a[0]), b=complex(b[0]), zeta=complex(zeta_arr[0]))
    return OracleSpectrum(a=a, b=b, zeta=zeta_arr)


def exact_jost_vector(
    zeta: ComplexLike, t: float, params: ChirpedSechParams, sigma: int = 1
) -> npt.NDArray[np.complex128]:
    """Exact left Jost solution (a e^{-i zeta t}, b e^{i zeta t}) at a point t past the signal."""
    spectrum = exact_ab(zeta, params, sigma)
    zeta = np.asarray(zeta, dtype=np.complex128)
    return np.stack(
        [np.asarray(spectrum.a) * np.exp(-1j * zeta * t), np.asarray(spectrum.b) * np.exp(1j * zeta * t)],
        axis=-1,
    )


def exact_eigenvalues(params: ChirpedSechParams) -> npt.NDArray[np.complex128]:
    """
    Discrete spectrum zeta_k = i(sqrt(A^2 - C^2/4) - 1/2 - k), k = 0..[sqrt(A^2 - C^2/4) - 1/2].

    Only eigenvalues strictly above the real axis are returned; the list is
    empty when A^2 < C^2/4 or the square root is below 1/2.
    """
    if params.detuning_squared < 0:
        return np.array([], dtype=np.complex128)
    d = math.sqrt(params.detuning_squared)
    if d < 0.5:
        return np.array([], dtype=np.complex128)
    etas = d - 0.5 - np.arange(math.floor(d - 0.5) + 1)
    etas = etas[etas > 0]
    return 1j * etas.astype(np.complex128)


def phi_sequence(count: int) -> List[float]:
    """phi_{k+1} = -(k+1) phi_k, phi_0 = 1, i.e. phi_k = (-1)^k k!."""
    phis = [1.0]
    for k in range(count - 1):
        phis.append(-(k + 1) * phis[-1])
    return phis[:count]


def _log_f(zeta: npt.NDArray[np.complex128], params: ChirpedSechParams) -> npt.NDArray[np.complex128]:
    """ln f(zeta), f = G(1/2-i(z+C/2)) G(1/2-i(z-C/2)) / G(1/2-iz+D)."""
    d = _detuning(params, 1)
    return _log_numerator(zeta, params.chirp) - log_gamma(0.5 - 1j * zeta + d)


def exact_a_derivative(params: ChirpedSechParams) -> npt.NDArray[np.complex128]:
    """a'(zeta_k) = -i f(zeta_k) phi_k at every eigenvalue."""
    eigenvalues = exact_eigenvalues(params)
    if len(eigenvalues) == 0:
        raise NoDiscreteSpectrum(f"A={params.amplitude}, C={params.chirp} has no discrete spectrum")
    phis = np.array(phi_sequence(len(eigenvalues)))
    return -1j * np.exp(_log_f(eigenvalues, params)) * phis


def exact_residuals(params: ChirpedSechParams) -> npt.NDArray[np.complex128]:
    """
    Phase coefficients r_k = b(zeta_k) / a'(zeta_k) = [b/f](zeta_k) * i / phi_k.

    Raises:
        NoDiscreteSpectrum: the potential has no eigenvalues
    """
    eigenvalues = exact_eigenvalues(params)
    if len(eigenvalues) == 0:
        raise NoDiscreteSpectrum(f"A={params.amplitude}, C={params.chirp} has no discrete spectrum")
    phis = np.array(phi_sequence(len(eigenvalues)))
    b = np.asarray(exact_ab(eigenvalues, params, 1).b)
    return b / np.exp(_log_f(eigenvalues, params)) * 1j / phis


def exact_energies(params: ChirpedSechParams, sigma: int = 1) -> Tuple[float, float, float]:
    """
    Energy split (E, E_d, E_c) of the chirped secant.

    With K and delta the integer and fractional parts of sqrt(A^2 - C^2/4) + 1/2:
    E = 2A^2, E_d = 2(K + delta - 1/2)^2 - 2(delta - 1/2)^2, E_c = 2(C^2/4 + (delta - 1/2)^2).

    Raises:
        DomainError: sigma = -1 or A^2 < C^2/4, where no closed form is stated
    """
    if sigma != 1:
        raise DomainError("Closed-form energy split is only available for anomalous dispersion (sigma=1)")
    if params.detuning_squared < 0:
        raise DomainError(f"A^2 < C^2/4 for A={params.amplitude}, C={params.chirp}")
    shifted = math.sqrt(params.detuning_squared) + 0.5
    k = math.floor(shifted)
    delta = shifted - k
    total = 2 * params.amplitude ** 2
    discrete = 2 * (k + delta - 0.5) ** 2 - 2 * (delta - 0.5) ** 2
    continuous = 2 * (params.chirp ** 2 / 4 + (delta - 0.5) ** 2)
    return total, discrete, continuous


def discrete_spectrum(params: ChirpedSechParams) -> DiscreteSpectrum:
    """Assemble eigenvalues, phase coefficients, b(zeta_k) and the energy split (sigma = 1)."""
    eigenvalues = exact_eigenvalues(params)
    total, discrete, continuous = exact_energies(params, 1)
    if len(eigenvalues):
        residuals = exact_residuals(params)
        b_values = np.asarray(exact_ab(eigenvalues, params, 1).b)
    else:
        residuals = np.array([], dtype=np.complex128)
        b_values = np.array([], dtype=np.complex128)
    logger.debug(f"Discrete spectrum of A={params.amplitude}, C={params.chirp}: {len(eigenvalues)} eigenvalues")
    return DiscreteSpectrum(
        eigenvalues=eigenvalues,
        residuals=residuals,
        b_values=b_values,
        energy_total=total,
        energy_discrete=discrete,
        energy_continuous=continuous,
    )
