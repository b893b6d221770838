"""Tests for Jost-solution propagation, derivatives, matching and continuous scans."""

import math

import numpy as np
import pytest

from zs_scatter.errors import DegenerateMatch, DomainError, OverflowDetected, ZeroDerivative
from zs_scatter.numerics import scattering
from zs_scatter.numerics.metrics import jost_deviation
from zs_scatter.numerics.oracle import (
    exact_a_derivative,
    exact_ab,
    exact_eigenvalues,
    exact_jost_vector,
    exact_residuals,
)
from zs_scatter.numerics.potentials import ChirpedSechParams, chirped_sech
from zs_scatter.numerics.scattering import (
    JostState,
    ScatteringResult,
    b_bidirectional,
    derivative_rk4_romberg,
    propagate,
    propagate_many,
    propagate_with_derivative,
    residual,
    scan_continuous,
)
from zs_scatter.numerics.schemes import DERIVATIVE_SCHEMES, PRODUCTION_SCHEMES, SchemeId

FOURTH_ORDER = [SchemeId.ES4, SchemeId.TES4, SchemeId.CT4, SchemeId.RK4]
A_AT_ORIGIN = -math.sqrt(2) / 2


class TestJostState:
    def test_rescaling_keeps_true_value(self):
        state = JostState.left(np.array([0j]), 0.0, 0.0)
        state.advance(np.diag([2.0 ** 600, 1.0]).astype(np.complex128)[None])
        assert np.max(np.abs(state.psi)) <= 1.0
        assert state.exponent[0] > 0
        assert state.restore(state.psi[..., 0])[0] == pytest.approx(2.0 ** 600, rel=1e-12)

    def test_non_finite_raises(self):
        state = JostState.left(np.array([0j]), 0.0, 0.0)
        with pytest.raises(OverflowDetected):
            state.advance(np.array([[[np.inf, 0], [0, 1]]], dtype=np.complex128))


class TestPropagation:
    @pytest.mark.parametrize("scheme", PRODUCTION_SCHEMES)
    def test_free_signal(self, free_signal, scheme):
        zetas = np.array([-3.0, 0.0, 1.5, 0.5 + 0.7j])
        for result in propagate_many(free_signal, zetas, scheme):
            assert result.a == pytest.approx(1.0, rel=1e-12)
            assert abs(result.b) < 1e-14

    @pytest.mark.parametrize("scheme", DERIVATIVE_SCHEMES)
    def test_large_imaginary_zeta_is_rescaled(self, free_signal, scheme):
        result = propagate(free_signal, 100j, scheme)
        assert result.a == pytest.approx(1.0, rel=1e-9)
        assert result.b == 0

    @pytest.mark.parametrize("scheme", FOURTH_ORDER)
    def test_a_at_origin(self, soliton_signal, scheme):
        assert propagate(soliton_signal, 0.0, scheme).a == pytest.approx(A_AT_ORIGIN, abs=1e-4)

    @pytest.mark.parametrize(
        "scheme, low, high",
        [(SchemeId.BO, 3.0, 5.0)] + [(s, 11.2, 20.8) for s in FOURTH_ORDER],
    )
    def test_error_ratio_per_doubling(self, soliton_params, scheme, low, high):
        # away from xi = 0 so that the cell matrices of a real q do not commute
        errors = []
        for m in (512, 1024):
            result = propagate(chirped_sech(soliton_params, 30.0, m), 1.0, scheme)
            exact = exact_jost_vector(1.0, result.t_end, soliton_params)
            errors.append(jost_deviation(result.jost_vector(), exact))
        assert low <= errors[0] / errors[1] <= high

    def test_chirped_error_ratio_per_doubling(self):
        params = ChirpedSechParams(1.25, chirp=1.5)
        errors = []
        for m in (512, 1024):
            result = propagate(chirped_sech(params, 30.0, m), 0.0, SchemeId.ES4)
            errors.append(jost_deviation(result.jost_vector(), exact_jost_vector(0.0, result.t_end, params)))
        assert 11.2 <= errors[0] / errors[1] <= 20.8

    def test_matches_oracle_on_real_axis(self, soliton_signal, soliton_params):
        xi = np.linspace(-3, 3, 13)
        exact = exact_ab(xi, soliton_params)
        results = propagate_many(soliton_signal, xi, SchemeId.ES4)
        np.testing.assert_allclose([r.a for r in results], exact.a, atol=1e-5)
        np.testing.assert_allclose([r.b for r in results], exact.b, atol=1e-5)

    @pytest.mark.slow
    @pytest.mark.parametrize("scheme", [SchemeId.ES4, SchemeId.CT4])
    def test_strongly_chirped_pulse(self, scheme):
        params = ChirpedSechParams(5.2, chirp=4.0)
        signal = chirped_sech(params, 30.0, 2048)
        xi = np.linspace(-4, 4, 17)
        exact = exact_ab(xi, params)
        results = propagate_many(signal, xi, scheme)
        np.testing.assert_allclose([r.a for r in results], exact.a, atol=1e-4)
        np.testing.assert_allclose([r.b for r in results], exact.b, atol=1e-4)

    def test_end_points(self, soliton_signal):
        stencil = propagate(soliton_signal, 0.3, SchemeId.ES4)
        envelope = propagate(soliton_signal, 0.3, SchemeId.RK4)
        assert stencil.t_end == pytest.approx(20.0 - soliton_signal.tau / 2)
        assert envelope.t_end == 20.0


class TestQuadraticInvariant:
    @pytest.mark.parametrize("scheme", DERIVATIVE_SCHEMES)
    def test_conservative_schemes_keep_h(self, soliton_signal, scheme):
        results = propagate_many(soliton_signal, np.linspace(-3, 3, 7), scheme, record_h=True)
        for result in results:
            assert result.h_trace.shape == (2 * soliton_signal.nodes,)
            np.testing.assert_allclose(result.h_trace, 1, atol=1e-11)
            assert result.quadratic_invariant == pytest.approx(1, abs=1e-11)

    def test_normal_dispersion(self, soliton_params):
        signal = chirped_sech(soliton_params, 20.0, 512, sigma=-1)
        result = propagate(signal, 0.8, SchemeId.CT4, record_h=True)
        np.testing.assert_allclose(result.h_trace, 1, atol=1e-9)
        assert abs(result.a) ** 2 - abs(result.b) ** 2 == pytest.approx(1, abs=1e-9)

    def test_rk4_drifts_slightly(self, soliton_signal):
        result = propagate(soliton_signal, 0.5, SchemeId.RK4, record_h=True)
        assert result.h_trace.shape == (soliton_signal.nodes,)
        assert np.max(np.abs(result.h_trace - 1)) < 1e-4

    @pytest.mark.parametrize("xi", [-2.0, 0.5, 3.0])
    def test_rk4_drift_dominates_conservative_drift(self, soliton_signal, xi):
        rk4 = propagate(soliton_signal, xi, SchemeId.RK4, record_h=True)
        es4 = propagate(soliton_signal, xi, SchemeId.ES4, record_h=True)
        assert np.max(np.abs(rk4.h_trace - 1)) >= 10 * np.max(np.abs(es4.h_trace - 1))


class TestDerivatives:
    @pytest.mark.parametrize("scheme", DERIVATIVE_SCHEMES)
    def test_matches_central_difference(self, coarse_signal, scheme):
        zeta, h = 0.4 + 0.6j, 1e-5
        result = propagate_with_derivative(coarse_signal, zeta, scheme)
        fd = (propagate(coarse_signal, zeta + h, scheme).a - propagate(coarse_signal, zeta - h, scheme).a) / (2 * h)
        assert result.da_dzeta == pytest.approx(fd, rel=1e-6)
        assert result.a == pytest.approx(propagate(coarse_signal, zeta, scheme).a, rel=1e-13)

    def test_matches_oracle_at_eigenvalue(self, soliton_signal, soliton_params):
        zeta0 = complex(exact_eigenvalues(soliton_params)[0])
        exact = complex(exact_a_derivative(soliton_params)[0])
        assert propagate_with_derivative(soliton_signal, zeta0, SchemeId.ES4).da_dzeta == pytest.approx(exact, rel=1e-4)
        assert derivative_rk4_romberg(soliton_signal, zeta0) == pytest.approx(exact, rel=1e-4)

    def test_romberg_needs_two_levels(self, coarse_signal):
        with pytest.raises(DomainError):
            derivative_rk4_romberg(coarse_signal, 0.5j, levels=1)

    def test_rk4_has_no_sweep_derivative(self, coarse_signal):
        with pytest.raises(DomainError):
            propagate_with_derivative(coarse_signal, 0.5j, SchemeId.RK4)
        with pytest.raises(DomainError):
            propagate_many(coarse_signal, 0.5j, SchemeId.RK4, with_derivative=True)


class TestDiscreteSpectrum:
    @pytest.mark.parametrize("scheme, tolerance", [(s, 1e-4) for s in FOURTH_ORDER] + [(SchemeId.BO, 2e-2)])
    def test_b_by_matching(self, soliton_signal, soliton_params, scheme, tolerance):
        zeta0 = complex(exact_eigenvalues(soliton_params)[0])
        exact = complex(exact_ab(zeta0, soliton_params).b)
        assert b_bidirectional(soliton_signal, zeta0, scheme) == pytest.approx(exact, rel=tolerance)

    def test_a_vanishes_at_eigenvalue(self, soliton_signal, soliton_params):
        zeta0 = complex(exact_eigenvalues(soliton_params)[0])
        assert abs(propagate(soliton_signal, zeta0, SchemeId.ES4).a) < 1e-5

    @pytest.mark.parametrize("scheme", [SchemeId.ES4, SchemeId.RK4])
    def test_residual(self, soliton_signal, soliton_params, scheme):
        zeta0 = complex(exact_eigenvalues(soliton_params)[0])
        exact = complex(exact_residuals(soliton_params)[0])
        assert residual(soliton_signal, zeta0, scheme) == pytest.approx(exact, rel=1e-3)

    def test_matching_needs_upper_half_plane(self, coarse_signal):
        with pytest.raises(DomainError):
            b_bidirectional(coarse_signal, 0.5, SchemeId.ES4)

    def test_degenerate_match(self, coarse_signal, monkeypatch):
        monkeypatch.setattr(scattering, "MATCH_FLOOR", 1e300)
        with pytest.raises(DegenerateMatch):
            b_bidirectional(coarse_signal, 0.75j, SchemeId.ES4)

    def test_zero_derivative(self, coarse_signal, monkeypatch):
        monkeypatch.setattr(scattering, "DERIVATIVE_FLOOR", 1e10)
        with pytest.raises(ZeroDerivative):
            residual(coarse_signal, 0.75j, SchemeId.ES4)


class TestScan:
    def test_parallel_matches_serial(self, coarse_signal):
        xi = np.linspace(-5, 5, 600)
        serial = scan_continuous(coarse_signal, xi, SchemeId.ES4)
        parallel = scan_continuous(coarse_signal, xi, SchemeId.ES4, parallel=True, threads=3)
        np.testing.assert_array_equal([r.zeta.real for r in serial], xi)
        np.testing.assert_array_equal([r.a for r in serial], [r.a for r in parallel])
        np.testing.assert_array_equal([r.b for r in serial], [r.b for r in parallel])

    def test_failed_points_are_reported(self, coarse_signal, monkeypatch):
        original = scattering.propagate_many

        def failing(signal, zetas, scheme, **kwargs):
            if np.any(np.atleast_1d(zetas) == 0):
                raise OverflowDetected("synthetic failure")
            return original(signal, zetas, scheme, **kwargs)

        monkeypatch.setattr(scattering, "propagate_many", failing)
        results = scan_continuous(coarse_signal, np.linspace(-1, 1, 5), SchemeId.ES4)
        assert [r.ok for r in results] == [True, True, False, True, True]
        assert math.isnan(results[2].a.real)
        assert "synthetic failure" in results[2].error

    def test_empty_grid(self, coarse_signal):
        with pytest.raises(DomainError):
            scan_continuous(coarse_signal, [], SchemeId.ES4)


class TestResult:
    def test_jost_vector_and_dict(self):
        result = ScatteringResult(zeta=0.5 + 0j, scheme=SchemeId.CT4, a=0.6 + 0j, b=0.8j, t_end=2.0)
        np.testing.assert_allclose(result.jost_vector(), [0.6 * np.exp(-1j), 0.8j * np.exp(1j)])
        assert result.quadratic_invariant == pytest.approx(1.0)
        data = result.to_dict()
        assert data["scheme"] == "ct4"
        assert data["b"] == [0.0, 0.8]
        assert data["da_dzeta"] is None
