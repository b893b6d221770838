"""
Exact 2x2 complex matrix algebra.

Matrices are numpy arrays of shape (..., 2, 2); every routine broadcasts over
the leading axes so a whole grid of spectral parameters is handled in one call.
Products are written out entry by entry, which keeps each result element
independent of the batch it was computed in.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

ComplexMatrix2 = npt.NDArray[np.complex128]
ComplexLike = Union[complex, npt.NDArray[np.complex128]]

SIGMA0 = np.array([[1, 0], [0, 1]], dtype=np.complex128)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)

# Below this |omega| the trigonometric factors switch to Maclaurin series
SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class PauliCoefficients:
    """Coefficients of A = a0*s0 + a1*s1 + a2*s2 + a3*s3."""

    a0: ComplexLike
    a1: ComplexLike
    a2: ComplexLike
    a3: ComplexLike

    def reconstruct(self) -> ComplexMatrix2:
        """Rebuild the matrix from its Pauli coefficients."""
        return from_entries(
            self.a0 + self.a3,
            self.a1 - 1j * self.a2,
            self.a1 + 1j * self.a2,
            self.a0 - self.a3,
        )

    def omega_squared(self) -> ComplexLike:
        """omega^2 = -(a1^2 + a2^2 + a3^2)."""
        return -(self.a1 ** 2 + self.a2 ** 2 + self.a3 ** 2)


def from_entries(m11, m12, m21, m22) -> ComplexMatrix2:
    """Stack four (broadcastable) entry arrays into a (..., 2, 2) matrix."""
    m11, m12, m21, m22 = np.broadcast_arrays(
        *(np.asarray(m, dtype=np.complex128) for m in (m11, m12, m21, m22))
    )
    out = np.empty(m11.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = m11
    out[..., 0, 1] = m12
    out[..., 1, 0] = m21
    out[..., 1, 1] = m22
    return out


def identity(shape: Tuple[int, ...] = ()) -> ComplexMatrix2:
    """Identity matrices of the given batch shape."""
    return np.broadcast_to(SIGMA0, tuple(shape) + (2, 2)).copy()


def mat_mul(a: ComplexMatrix2, b: ComplexMatrix2) -> ComplexMatrix2:
    """Matrix product a @ b."""
    return from_entries(
        a[..., 0, 0] * b[..., 0, 0] + a[..., 0, 1] * b[..., 1, 0],
        a[..., 0, 0] * b[..., 0, 1] + a[..., 0, 1] * b[..., 1, 1],
        a[..., 1, 0] * b[..., 0, 0] + a[..., 1, 1] * b[..., 1, 0],
        a[..., 1, 0] * b[..., 0, 1] + a[..., 1, 1] * b[..., 1, 1],
    )


def mat_chain(*matrices: ComplexMatrix2) -> ComplexMatrix2:
    """Left-to-right product of several matrices."""
    result = matrices[0]
    for m in matrices[1:]:
        result = mat_mul(result, m)
    return result


def mat_vec(a: ComplexMatrix2, v: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """Apply matrices of shape (..., 2, 2) to vectors of shape (..., 2)."""
    out = np.empty(np.broadcast_shapes(a.shape[:-1], v.shape), dtype=np.complex128)
    out[..., 0] = a[..., 0, 0] * v[..., 0] + a[..., 0, 1] * v[..., 1]
    out[..., 1] = a[..., 1, 0] * v[..., 0] + a[..., 1, 1] * v[..., 1]
    return out


def mat_det(a: ComplexMatrix2) -> ComplexLike:
    return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]


def mat_inv(a: ComplexMatrix2) -> ComplexMatrix2:
    """Closed-form inverse; callers check |det| when singularity is possible."""
    det = mat_det(a)
    return from_entries(
        a[..., 1, 1] / det,
        -a[..., 0, 1] / det,
        -a[..., 1, 0] / det,
        a[..., 0, 0] / det,
    )


def dagger(a: ComplexMatrix2) -> ComplexMatrix2:
    """Conjugate transpose."""
    return np.conj(np.swapaxes(a, -1, -2))


def frobenius_norm(a: ComplexMatrix2) -> npt.NDArray[np.float64]:
    return np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))


def pauli_decompose(a: ComplexMatrix2) -> PauliCoefficients:
    """
    Decompose a 2x2 matrix into Pauli coefficients.

    Args:
        a: matrix of shape (..., 2, 2)

    Returns:
        PauliCoefficients with entries of shape (...)
    """
    m11, m12, m21, m22 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 0], a[..., 1, 1]
    return PauliCoefficients(
        a0=(m11 + m22) / 2,
        a1=(m12 + m21) / 2,
        a2=1j * (m12 - m21) / 2,
        a3=(m11 - m22) / 2,
    )


def _cos_sinc(w2: ComplexLike) -> Tuple[ComplexLike, ComplexLike, ComplexLike]:
    """Return (cos w, sin(w)/w, (cos w - sin(w)/w)/w^2) for w = sqrt(w2)."""
    w2 = np.asarray(w2, dtype=np.complex128)
    w = np.sqrt(w2)
    small = np.abs(w) < SERIES_CUTOFF
    w_safe = np.where(small, 1.0, w)
    w2_safe = w_safe * w_safe

    c = np.where(small, 1 - w2 / 2 + w2 ** 2 / 24 - w2 ** 3 / 720, np.cos(w_safe))
    s = np.where(small, 1 - w2 / 6 + w2 ** 2 / 120 - w2 ** 3 / 5040, np.sin(w_safe) / w_safe)
    # (c - s) / w^2, whose Maclaurin coefficients are (-1)^k 2k / (2k+1)!
    d = np.where(
        small,
        -1 / 3 + w2 / 30 - w2 ** 2 / 840 + w2 ** 3 / 45360,
        (np.cos(w_safe) - np.sin(w_safe) / w_safe) / w2_safe,
    )
    return c, s, d


def mat_exp(a: ComplexMatrix2) -> ComplexMatrix2:
    """
    Closed-form matrix exponential through the Pauli decomposition.

    e^A = e^{a0} [c*s0 + s*(a1*s1 + a2*s2 + a3*s3)], c = cos(w), s = sin(w)/w,
    w = sqrt(-a1^2 - a2^2 - a3^2). Both factors are even in w, so the square
    root branch does not matter.
    """
    p = pauli_decompose(a)
    c, s, _ = _cos_sinc(p.omega_squared())
    scale = np.exp(p.a0)
    return from_entries(
        scale * (c + s * p.a3),
        scale * s * (p.a1 - 1j * p.a2),
        scale * s * (p.a1 + 1j * p.a2),
        scale * (c - s * p.a3),
    )


def mat_exp_derivative(a: ComplexMatrix2, da: ComplexMatrix2) -> ComplexMatrix2:
    """
    Derivative of e^{A(z)} given A and dA/dz.

    Uses c' = s*g and s' = -g*(c - s)/w^2 with g = a1*a1' + a2*a2' + a3*a3',
    so no division by w occurs near w = 0.
    """
    p = pauli_decompose(a)
    dp = pauli_decompose(da)
    c, s, d = _cos_sinc(p.omega_squared())
    g = p.a1 * dp.a1 + p.a2 * dp.a2 + p.a3 * dp.a3
    dc = s * g
    ds = -g * d
    scale = np.asarray(np.exp(p.a0))

    inner = from_entries(
        dc + ds * p.a3 + s * dp.a3,
        ds * (p.a1 - 1j * p.a2) + s * (dp.a1 - 1j * dp.a2),
        ds * (p.a1 + 1j * p.a2) + s * (dp.a1 + 1j * dp.a2),
        dc - ds * p.a3 - s * dp.a3,
    )
    exp_part = from_entries(c + s * p.a3, s * (p.a1 - 1j * p.a2), s * (p.a1 + 1j * p.a2), c - s * p.a3)
    da0 = np.asarray(dp.a0)[..., None, None]
    return scale[..., None, None] * (inner + da0 * exp_part)


def exp_zeta_derivative(q_n: ComplexLike, zeta: ComplexLike, tau: float, sigma: int) -> ComplexMatrix2:
    """
    d/dzeta of exp(tau * Q(q_n, zeta)) for the Zakharov-Shabat generator.

    Equals -(tau*zeta/w) sin(w*tau) I + (zeta/w^3)[tau*w cos(w*tau) - sin(w*tau)] Q
    - i sin(w*tau)/w * s3 with w = sqrt(zeta^2 + sigma*|q_n|^2).

    Args:
        q_n: potential sample(s)
        zeta: spectral parameter(s)
        tau: grid step, must be positive
        sigma: +1 (anomalous) or -1 (normal dispersion)
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    q_n = np.asarray(q_n, dtype=np.complex128)
    zeta = np.asarray(zeta, dtype=np.complex128)
    generator = from_entries(-1j * zeta, q_n, -sigma * np.conj(q_n), 1j * zeta)
    direction = np.broadcast_to(-1j * tau * SIGMA3, generator.shape)
    return mat_exp_derivative(tau * generator, direction)
