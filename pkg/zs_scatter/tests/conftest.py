"""Shared fixtures: chirped secant signals with a known closed-form spectrum."""

import numpy as np
import pytest

from zs_scatter.numerics.potentials import ChirpedSechParams, SignalGrid, chirped_sech

# A = 1.25 has one eigenvalue at 0.75i and a(0) = cos(1.25 pi) = -sqrt(2)/2
SOLITON_PARAMS = ChirpedSechParams(amplitude=1.25)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def soliton_params() -> ChirpedSechParams:
    return SOLITON_PARAMS


@pytest.fixture
def soliton_signal() -> SignalGrid:
    return chirped_sech(SOLITON_PARAMS, length=20.0, nodes=1024)


@pytest.fixture
def coarse_signal() -> SignalGrid:
    return chirped_sech(SOLITON_PARAMS, length=10.0, nodes=128)


@pytest.fixture
def free_signal() -> SignalGrid:
    return SignalGrid(samples=np.zeros(2 * 64 + 1), length=10.0, nodes=64)
