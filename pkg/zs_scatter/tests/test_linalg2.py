"""
Tests for the closed-form 2x2 algebra.

The exponential is checked against a scaling-and-squaring Taylor series,
the derivative against central differences and the closed form of
d/dzeta exp(tau Q).
"""

import numpy as np
import pytest

from zs_scatter.numerics.linalg2 import (
    SIGMA0,
    SIGMA3,
    dagger,
    exp_zeta_derivative,
    from_entries,
    mat_det,
    mat_exp,
    mat_exp_derivative,
    mat_inv,
    mat_mul,
    mat_vec,
    pauli_decompose,
)
from zs_scatter.numerics.potentials import q_matrix


def _expm_reference(a: np.ndarray) -> np.ndarray:
    """Taylor series after scaling by 2^-s, then s squarings."""
    norm = np.linalg.norm(a)
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    scaled = a / 2 ** s
    result = np.eye(2, dtype=np.complex128)
    term = np.eye(2, dtype=np.complex128)
    for k in range(1, 30):
        term = term @ scaled / k
        result = result + term
    for _ in range(s):
        result = result @ result
    return result


def _random_matrices(rng, count: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal((count, 2, 2)) + 1j * rng.standard_normal((count, 2, 2)))


class TestPauli:
    def test_decompose_reconstructs(self, rng):
        a = _random_matrices(rng, 8)
        np.testing.assert_allclose(pauli_decompose(a).reconstruct(), a, atol=1e-14)

    def test_sigma3_coefficients(self):
        p = pauli_decompose(SIGMA3)
        assert (p.a0, p.a1, p.a2, p.a3) == (0, 0, 0, 1)


class TestProducts:
    def test_mat_mul_matches_matmul(self, rng):
        a, b = _random_matrices(rng, 5), _random_matrices(rng, 5)
        np.testing.assert_allclose(mat_mul(a, b), a @ b, atol=1e-13)

    def test_mat_vec_broadcasts(self, rng):
        a = _random_matrices(rng, 4)
        v = rng.standard_normal((4, 2)) + 0j
        np.testing.assert_allclose(mat_vec(a, v), np.einsum("nij,nj->ni", a, v), atol=1e-13)

    def test_inverse(self, rng):
        a = _random_matrices(rng, 6)
        np.testing.assert_allclose(mat_mul(a, mat_inv(a)), np.broadcast_to(SIGMA0, a.shape), atol=1e-12)

    def test_from_entries_broadcasts_scalars(self):
        m = from_entries(1, np.array([2, 3]), 0, 1)
        assert m.shape == (2, 2, 2)
        assert m[1, 0, 1] == 3


class TestMatExp:
    @pytest.mark.parametrize("scale", [1e-6, 0.1, 1.0, 5.0])
    def test_matches_taylor_reference(self, rng, scale):
        for a in _random_matrices(rng, 6, scale):
            expected = _expm_reference(a)
            np.testing.assert_allclose(mat_exp(a), expected, rtol=1e-11, atol=1e-12 * np.linalg.norm(expected))

    def test_zero_is_identity(self):
        np.testing.assert_array_equal(mat_exp(np.zeros((2, 2), dtype=np.complex128)), SIGMA0)

    def test_nilpotent_uses_series(self):
        a = np.array([[0, 1e-6], [0, 0]], dtype=np.complex128)
        np.testing.assert_allclose(mat_exp(a), [[1, 1e-6], [0, 1]], atol=1e-17)

    def test_anti_hermitian_gives_unitary(self):
        zeta = np.linspace(-3, 3, 7)
        t = mat_exp(0.2 * q_matrix(1.3 - 0.4j, zeta, 1))
        np.testing.assert_allclose(mat_mul(dagger(t), t), np.broadcast_to(SIGMA0, t.shape), atol=1e-14)
        np.testing.assert_allclose(mat_det(t), 1, atol=1e-14)

    def test_branch_independent_for_negative_omega_squared(self):
        # omega^2 < 0: hyperbolic case with the principal root on the imaginary axis
        a = np.array([[3.0, 0], [0, -3.0]], dtype=np.complex128)
        np.testing.assert_allclose(mat_exp(a), np.diag([np.exp(3.0), np.exp(-3.0)]), rtol=1e-12)


class TestExpDerivative:
    @pytest.mark.parametrize("scale", [1e-5, 0.3, 2.0])
    def test_matches_central_difference(self, rng, scale):
        a, da = _random_matrices(rng, 2, scale)
        h = 1e-6
        expected = (mat_exp(a + h * da) - mat_exp(a - h * da)) / (2 * h)
        np.testing.assert_allclose(mat_exp_derivative(a, da), expected, rtol=1e-7, atol=1e-8)

    def test_at_zero_is_direction(self, rng):
        da = _random_matrices(rng, 1)[0]
        np.testing.assert_allclose(mat_exp_derivative(np.zeros((2, 2), dtype=np.complex128), da), da, atol=1e-15)

    @pytest.mark.parametrize("sigma", [1, -1])
    def test_zeta_derivative_closed_form(self, sigma):
        q, zeta, tau = 0.7 + 0.2j, 0.4 + 0.1j, 0.3
        w = np.sqrt(zeta ** 2 + sigma * abs(q) ** 2)
        qm = q_matrix(q, zeta, sigma)
        expected = (
            -(tau * zeta / w) * np.sin(w * tau) * SIGMA0
            + (zeta / w ** 3) * (tau * w * np.cos(w * tau) - np.sin(w * tau)) * qm
            - 1j * np.sin(w * tau) / w * SIGMA3
        )
        np.testing.assert_allclose(exp_zeta_derivative(q, zeta, tau, sigma), expected, atol=1e-14)

    def test_zeta_derivative_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            exp_zeta_derivative(1.0, 0.5, 0.0, 1)
