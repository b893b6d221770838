"""
Tests for the per-node transition matrices.

Local accuracy is measured against the fourth-order Taylor reference built
from analytic derivatives of the chirped secant: halving tau should shrink
the one-step deviation by 2^5 for the fourth-order schemes and 2^3 for BO.
"""

import numpy as np
import pytest

from zs_scatter.errors import SingularCayley
from zs_scatter.numerics import schemes
from zs_scatter.numerics.linalg2 import SIGMA0, SIGMA3, dagger, frobenius_norm, mat_chain, mat_det, mat_mul
from zs_scatter.numerics.potentials import ChirpedSechParams, SignalGrid, chirped_sech_derivatives
from zs_scatter.numerics.schemes import (
    DERIVATIVE_SCHEMES,
    NodeStencil,
    SchemeId,
    step_rk4,
    transition,
    transition_inverse,
    transition_taylor4,
    transition_with_derivative,
    transition_zeta_derivative,
)

FOURTH_ORDER = [SchemeId.ES4, SchemeId.TES4, SchemeId.CT4]
STENCIL_SCHEMES = [SchemeId.BO] + FOURTH_ORDER


def _stencil(zeta, sigma=1, tau=0.05) -> NodeStencil:
    return NodeStencil(1.1 - 0.6j, 2.0 + 0.3j, 1.4 + 0.9j, tau, zeta, sigma)


def _chirped_stencil(params, t_center, tau, zeta):
    q, _, _, _ = chirped_sech_derivatives(params, np.array([t_center - tau, t_center, t_center + tau]))
    return NodeStencil(complex(q[0]), complex(q[1]), complex(q[2]), tau, zeta)


def _taylor_deviation(scheme, tau, params=ChirpedSechParams(1.0, 0.5), t_center=0.7, zeta=0.3):
    stencil = _chirped_stencil(params, t_center, tau, zeta)
    _, q1, q2, q3 = chirped_sech_derivatives(params, t_center)
    reference = transition_taylor4(stencil, (complex(q1), complex(q2), complex(q3)))
    return float(frobenius_norm(transition(scheme, stencil) - reference))


class TestSchemeId:
    def test_properties(self):
        assert SchemeId.BO.order == 2
        assert SchemeId.CT4.order == 4
        assert not SchemeId.RK4.conservative
        assert not SchemeId.RK4.has_transition
        assert SchemeId("tes4") is SchemeId.TES4

    def test_stencil_rejects_nonpositive_step(self):
        with pytest.raises(ValueError):
            NodeStencil(0, 0, 0, 0.0, 0.5)

    def test_rk4_has_no_transition(self):
        with pytest.raises(ValueError):
            transition(SchemeId.RK4, _stencil(0.5))
        with pytest.raises(ValueError):
            transition_inverse(SchemeId.TAYLOR4, _stencil(0.5))


class TestStructure:
    @pytest.mark.parametrize("scheme", STENCIL_SCHEMES)
    def test_free_stencil_is_phase_rotation(self, scheme):
        zeta = np.array([-2.0, 0.5, 1.0 + 0.7j])
        t = transition(scheme, NodeStencil(0, 0, 0, 0.1, zeta))
        np.testing.assert_allclose(t[:, 0, 0], np.exp(-0.1j * zeta), rtol=1e-13)
        np.testing.assert_allclose(t[:, 1, 1], np.exp(0.1j * zeta), rtol=1e-13)
        np.testing.assert_allclose(t[:, 0, 1], 0, atol=1e-16)
        np.testing.assert_allclose(t[:, 1, 0], 0, atol=1e-16)

    @pytest.mark.parametrize("scheme", STENCIL_SCHEMES)
    def test_unitary_for_real_zeta(self, scheme):
        t = transition(scheme, _stencil(np.linspace(-4, 4, 9)))
        np.testing.assert_allclose(mat_mul(dagger(t), t), np.broadcast_to(SIGMA0, t.shape), atol=1e-13)
        np.testing.assert_allclose(mat_det(t), 1, atol=1e-13)

    @pytest.mark.parametrize("scheme", STENCIL_SCHEMES)
    def test_pseudo_unitary_for_normal_dispersion(self, scheme):
        t = transition(scheme, _stencil(np.linspace(-4, 4, 9), sigma=-1))
        form = mat_chain(dagger(t), np.broadcast_to(SIGMA3, t.shape), t)
        np.testing.assert_allclose(form, np.broadcast_to(SIGMA3, t.shape), atol=1e-13)
        np.testing.assert_allclose(mat_det(t), 1, atol=1e-13)

    @pytest.mark.parametrize("scheme", FOURTH_ORDER)
    def test_constant_stencil_reduces_to_bo(self, scheme):
        stencil = NodeStencil(1.5 + 0.5j, 1.5 + 0.5j, 1.5 + 0.5j, 0.08, np.array([0.2, -1.3 + 0.4j]))
        np.testing.assert_allclose(transition(scheme, stencil), transition(SchemeId.BO, stencil), atol=1e-13)

    @pytest.mark.parametrize("scheme", STENCIL_SCHEMES)
    def test_inverse(self, scheme):
        stencil = _stencil(np.array([0.5 + 0.7j, -1.0 + 2.0j]))
        product = mat_mul(transition(scheme, stencil), transition_inverse(scheme, stencil))
        np.testing.assert_allclose(product, np.broadcast_to(SIGMA0, product.shape), atol=1e-12)

    def test_singular_cayley(self, monkeypatch):
        monkeypatch.setattr(schemes, "CAYLEY_DET_FLOOR", 10.0)
        with pytest.raises(SingularCayley):
            transition(SchemeId.CT4, _stencil(0.5))


class TestLocalOrder:
    @pytest.mark.parametrize("scheme", FOURTH_ORDER)
    def test_fourth_order_one_step_error(self, scheme):
        ratio = _taylor_deviation(scheme, 0.02) / _taylor_deviation(scheme, 0.01)
        assert 24 <= ratio <= 40

    def test_bo_one_step_error(self):
        ratio = _taylor_deviation(SchemeId.BO, 0.02) / _taylor_deviation(SchemeId.BO, 0.01)
        assert 6 <= ratio <= 10

    def test_taylor_reference_matches_micro_steps(self):
        # 64 BO micro-steps across the cell converge to the exact propagator at O(h^2)
        params, t_center, tau, zeta = ChirpedSechParams(1.0, 0.5), 0.7, 0.02, 0.3
        _, q1, q2, q3 = chirped_sech_derivatives(params, t_center)
        reference = transition_taylor4(
            _chirped_stencil(params, t_center, tau, zeta), (complex(q1), complex(q2), complex(q3))
        )
        micro = 64
        h = tau / micro
        centers = t_center - tau / 2 + h * (np.arange(micro) + 0.5)
        product = np.eye(2, dtype=np.complex128)
        for c in centers:
            product = mat_mul(transition(SchemeId.BO, _chirped_stencil(params, c, h, zeta)), product)
        assert float(frobenius_norm(product - reference)) < 1e-8


class TestZetaDerivative:
    @pytest.mark.parametrize("scheme", DERIVATIVE_SCHEMES)
    def test_matches_central_difference(self, scheme):
        zeta, h = 0.3 + 0.2j, 1e-6
        plus = transition(scheme, _stencil(zeta + h))
        minus = transition(scheme, _stencil(zeta - h))
        expected = (plus - minus) / (2 * h)
        np.testing.assert_allclose(transition_zeta_derivative(scheme, _stencil(zeta)), expected, atol=1e-8)

    @pytest.mark.parametrize("scheme", DERIVATIVE_SCHEMES)
    def test_pair_matches_plain_transition(self, scheme):
        stencil = _stencil(np.array([0.1, 1.0 + 0.5j]))
        t, _ = transition_with_derivative(scheme, stencil)
        np.testing.assert_allclose(t, transition(scheme, stencil), atol=1e-15)


class TestRk4Step:
    def test_free_signal_is_identity(self, free_signal):
        step = step_rk4(free_signal, np.array([0.5, 1.0 + 0.2j]), 10)
        np.testing.assert_allclose(step, np.broadcast_to(SIGMA0, step.shape), atol=1e-15)

    def test_backward_undoes_forward(self, coarse_signal):
        zeta = np.array([0.4, -1.1])
        n = coarse_signal.nodes - 1
        forward = step_rk4(coarse_signal, zeta, n)
        backward = step_rk4(coarse_signal, zeta, n, backward=True)
        product = mat_mul(backward, forward)
        np.testing.assert_allclose(product, np.broadcast_to(SIGMA0, product.shape), atol=1e-4)

    def test_step_past_grid_end(self, coarse_signal):
        with pytest.raises(IndexError):
            step_rk4(coarse_signal, 0.5, 2 * coarse_signal.nodes - 1)
        with pytest.raises(IndexError):
            step_rk4(coarse_signal, 0.5, -1)

    def test_constant_signal(self):
        signal = SignalGrid(samples=np.full(5, 0.3 + 0j), length=0.2, nodes=2)
        step = step_rk4(signal, 0.0, 0)
        # zeta = 0, constant q: chi' = [[0, q], [-q, 0]] chi, exact rotation by 2 tau q
        angle = 2 * signal.tau * 0.3
        expected = np.array([[np.cos(angle), np.sin(angle)], [-np.sin(angle), np.cos(angle)]])
        np.testing.assert_allclose(step, expected, atol=1e-7)
