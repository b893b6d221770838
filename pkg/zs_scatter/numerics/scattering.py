"""
Jost-solution propagation and the spectral data derived from it.

Every sweep runs sequentially over the grid nodes and is vectorised over an
array of spectral parameters. Solutions that grow like e^{Im(zeta) t} are
kept representable by power-of-two rescaling; a and b are reconstructed from
the normalised components and the accumulated scale in log space.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..errors import DegenerateMatch, DomainError, NumericError, OverflowDetected, ZeroDerivative
from .linalg2 import ComplexLike, ComplexMatrix2, mat_vec
from .potentials import SignalGrid
from .schemes import (
    DERIVATIVE_SCHEMES,
    NodeStencil,
    SchemeId,
    step_rk4,
    transition,
    transition_inverse,
    transition_with_derivative,
)

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
RESCALE_THRESHOLD = 2.0 ** 500
# Largest |Re| of a log scale that may be exponentiated directly
DIRECT_EXP_LIMIT = 600.0
MATCH_FLOOR = 1e-250
DERIVATIVE_FLOOR = 1e-14
ROMBERG_STEP = 1e-3
# Points per vectorised block of a continuous scan; fixed so results do not depend on threading
SCAN_CHUNK = 256


def _scaled(values: npt.NDArray[np.complex128], log_scale: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """values * e^{log_scale} without intermediate overflow; zeros stay zero."""
    direct = np.abs(log_scale.real) < DIRECT_EXP_LIMIT
    with np.errstate(all="ignore"):
        plain = values * np.exp(np.where(direct, log_scale, 0))
        nonzero = values != 0
        via_log = np.exp(np.log(np.where(nonzero, values, 1.0)) + log_scale)
    return np.where(direct, plain, np.where(nonzero, via_log, 0j))


@dataclass
class JostState:
    """
    Normalised Jost vectors of a batch of spectral parameters.

    The true vector is psi * 2^exponent * e^{log_factor}. position counts grid
    steps from t = -L, so half-integer values are cell boundaries.
    """

    psi: npt.NDArray[np.complex128]
    position: float
    exponent: npt.NDArray[np.int64]
    log_factor: npt.NDArray[np.complex128]
    dpsi: Optional[npt.NDArray[np.complex128]] = None

    @classmethod
    def left(
        cls, zetas: npt.NDArray[np.complex128], t_start: float, position: float, with_derivative: bool = False
    ) -> "JostState":
        """Psi = (e^{-i zeta t}, 0) and its zeta-derivative (-i t psi_1, 0)."""
        psi = np.zeros(zetas.shape + (2,), dtype=np.complex128)
        psi[..., 0] = 1.0
        dpsi = None
        if with_derivative:
            dpsi = np.zeros_like(psi)
            dpsi[..., 0] = -1j * t_start
        return cls(psi, position, np.zeros(zetas.shape, dtype=np.int64), -1j * zetas * t_start, dpsi)

    @classmethod
    def right(cls, zetas: npt.NDArray[np.complex128], t_start: float, position: float) -> "JostState":
        """Phi = (0, e^{i zeta t})."""
        psi = np.zeros(zetas.shape + (2,), dtype=np.complex128)
        psi[..., 1] = 1.0
        return cls(psi, position, np.zeros(zetas.shape, dtype=np.int64), 1j * zetas * t_start)

    def advance(self, matrix: ComplexMatrix2, derivative: Optional[ComplexMatrix2] = None, steps: float = 1.0):
        """Apply one transition (and d/dzeta of it to the derivative vector)."""
        psi = mat_vec(matrix, self.psi)
        if self.dpsi is not None:
            assert derivative is not None
            self.dpsi = mat_vec(derivative, self.psi) + mat_vec(matrix, self.dpsi)
        self.psi = psi
        self.position += steps
        self._rescale()

    def _rescale(self):
        size = np.max(np.abs(self.psi), axis=-1)
        if self.dpsi is not None:
            size = np.maximum(size, np.max(np.abs(self.dpsi), axis=-1))
        if not np.all(np.isfinite(size)):
            raise OverflowDetected(f"Jost solution is not finite at grid position {self.position}")
        large = size > RESCALE_THRESHOLD
        if not np.any(large):
            return
        _, shift = np.frexp(np.where(large, size, 1.0))
        shift = np.where(large, shift, 0).astype(np.int64)
        factor = np.ldexp(1.0, -shift)[..., None]
        self.psi = self.psi * factor
        if self.dpsi is not None:
            self.dpsi = self.dpsi * factor
        self.exponent = self.exponent + shift

    @property
    def log_scale(self) -> npt.NDArray[np.complex128]:
        return self.log_factor + self.exponent * LOG2

    def restore(self, values: npt.NDArray[np.complex128], extra_log: ComplexLike = 0.0) -> npt.NDArray[np.complex128]:
        """values * 2^exponent * e^{log_factor + extra_log}."""
        return _scaled(values, self.log_scale + extra_log)

    def log_magnitude(self) -> npt.NDArray[np.float64]:
        """ln |component| of the true vector (-inf for zero components)."""
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.psi)) + self.log_scale.real[..., None]

    def quadratic_invariant(self, sigma: int, envelope_log: ComplexLike = 0.0) -> npt.NDArray[np.float64]:
        """H = |psi_1|^2 + sigma |psi_2|^2 of the true vector."""
        scale = 2 * (self.log_scale.real + np.real(envelope_log))
        cross = 2 * (self.log_scale.real - np.real(envelope_log))
        with np.errstate(over="ignore"):
            return np.abs(self.psi[..., 0]) ** 2 * np.exp(scale) + sigma * np.abs(self.psi[..., 1]) ** 2 * np.exp(cross)


@dataclass
class ScatteringResult:
    """Spectral data at one spectral parameter."""

    zeta: complex
    scheme: SchemeId
    a: complex
    b: complex
    t_end: float
    sigma: int = 1
    da_dzeta: Optional[complex] = None
    h_trace: Optional[npt.NDArray[np.float64]] = field(default=None, repr=False)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def quadratic_invariant(self) -> float:
        """|a|^2 + sigma |b|^2, equal to 1 on the real axis."""
        return abs(self.a) ** 2 + self.sigma * abs(self.b) ** 2

    def jost_vector(self) -> npt.NDArray[np.complex128]:
        """(psi_1, psi_2) at t_end, where the solution is a free wave again."""
        return np.array([self.a * np.exp(-1j * self.zeta * self.t_end), self.b * np.exp(1j * self.zeta * self.t_end)])

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "zeta": [self.zeta.real, self.zeta.imag],
            "scheme": self.scheme.value,
            "a": [self.a.real, self.a.imag],
            "b": [self.b.real, self.b.imag],
            "t_end": self.t_end,
            "da_dzeta": None if self.da_dzeta is None else [self.da_dzeta.real, self.da_dzeta.imag],
            "error": self.error,
        }


def _as_zetas(zeta: ComplexLike) -> npt.NDArray[np.complex128]:
    return np.atleast_1d(np.asarray(zeta, dtype=np.complex128)).ravel()


def _require_stencil_scheme(scheme: SchemeId) -> SchemeId:
    scheme = SchemeId(scheme)
    if scheme not in DERIVATIVE_SCHEMES:
        raise DomainError(f"Scheme {scheme.value} has no per-node transition for this operation")
    return scheme


def _sweep_stencil(
    signal: SignalGrid,
    zetas: npt.NDArray[np.complex128],
    scheme: SchemeId,
    stop: int,
    with_derivative: bool = False,
    record_h: bool = False,
) -> Tuple[JostState, Optional[npt.NDArray[np.float64]]]:
    """Forward propagation from -L - tau/2 through nodes 0..stop-1."""
    t_start = -signal.length - signal.tau / 2
    state = JostState.left(zetas, t_start, -0.5, with_derivative)
    trace = np.empty(zetas.shape + (stop,)) if record_h else None
    for n in range(stop):
        stencil = NodeStencil.from_signal(signal, n, zetas)
        if with_derivative:
            t, dt = transition_with_derivative(scheme, stencil)
            state.advance(t, dt)
        else:
            state.advance(transition(scheme, stencil))
        if trace is not None:
            trace[..., n] = state.quadratic_invariant(signal.sigma)
    return state, trace


def _envelope_log(zetas: npt.NDArray[np.complex128], t: float) -> npt.NDArray[np.complex128]:
    """log of the first-component phase e^{-i zeta t} linking chi and psi."""
    return -1j * zetas * t


def _sweep_rk4(
    signal: SignalGrid, zetas: npt.NDArray[np.complex128], stop: int, record_h: bool = False
) -> Tuple[JostState, Optional[npt.NDArray[np.float64]]]:
    """Envelope propagation chi(-L) = (1, 0) through RK4 steps of 2 tau up to node stop."""
    state = JostState(
        psi=np.tile(np.array([1.0 + 0j, 0j]), zetas.shape + (1,)),
        position=0.0,
        exponent=np.zeros(zetas.shape, dtype=np.int64),
        log_factor=np.zeros(zetas.shape, dtype=np.complex128),
    )
    times = signal.times
    steps = list(range(0, stop, 2))
    trace = np.empty(zetas.shape + (len(steps),)) if record_h else None
    for i, n in enumerate(steps):
        state.advance(step_rk4(signal, zetas, n), steps=2)
        if trace is not None:
            trace[..., i] = state.quadratic_invariant(signal.sigma, _envelope_log(zetas, times[n + 2]))
    return state, trace


def _results(
    zetas: npt.NDArray[np.complex128],
    scheme: SchemeId,
    a: npt.NDArray[np.complex128],
    b: npt.NDArray[np.complex128],
    t_end: float,
    sigma: int,
    da: Optional[npt.NDArray[np.complex128]] = None,
    trace: Optional[npt.NDArray[np.float64]] = None,
) -> List[ScatteringResult]:
    return [
        ScatteringResult(
            zeta=complex(zetas[i]),
            scheme=scheme,
            a=complex(a[i]),
            b=complex(b[i]),
            t_end=t_end,
            sigma=sigma,
            da_dzeta=None if da is None else complex(da[i]),
            h_trace=None if trace is None else trace[i],
        )
        for i in range(len(zetas))
    ]


def propagate_many(
    signal: SignalGrid,
    zetas: ComplexLike,
    scheme: SchemeId,
    record_h: bool = False,
    with_derivative: bool = False,
) -> List[ScatteringResult]:
    """
    Propagate the left Jost solution for a batch of spectral parameters.

    Stencil schemes apply T at nodes 0..2M-1 and read a, b at L - tau/2.
    RK4 steps the envelope from -L to L and reads a, b at L.

    Raises:
        OverflowDetected: a transition or the Jost vector is not finite
        SingularCayley: CT4 Cayley factor is singular
    """
    scheme = SchemeId(scheme)
    zetas = _as_zetas(zetas)
    end = 2 * signal.nodes
    if scheme is SchemeId.RK4:
        if with_derivative:
            raise DomainError("RK4 derivatives come from Romberg extrapolation, see derivative_rk4_romberg")
        state, trace = _sweep_rk4(signal, zetas, end, record_h)
        a = state.restore(state.psi[..., 0])
        b = state.restore(state.psi[..., 1])
        return _results(zetas, scheme, a, b, signal.length, signal.sigma, trace=trace)

    _require_stencil_scheme(scheme)
    state, trace = _sweep_stencil(signal, zetas, scheme, end, with_derivative, record_h)
    t_end = signal.length - signal.tau / 2
    a = state.restore(state.psi[..., 0], 1j * zetas * t_end)
    b = state.restore(state.psi[..., 1], -1j * zetas * t_end)
    da = None
    if with_derivative:
        assert state.dpsi is not None
        da = state.restore(state.dpsi[..., 0] + 1j * t_end * state.psi[..., 0], 1j * zetas * t_end)
    logger.debug(f"Propagated {len(zetas)} spectral points with {scheme.value} (M={signal.nodes})")
    return _results(zetas, scheme, a, b, t_end, signal.sigma, da, trace)


def propagate(signal: SignalGrid, zeta: complex, scheme: SchemeId, record_h: bool = False) -> ScatteringResult:
    """
    a(zeta), b(zeta) of one spectral parameter.

    If record_h is set, H = |psi_1|^2 + sigma |psi_2|^2 is stored after every step.
    """
    return propagate_many(signal, zeta, scheme, record_h=record_h)[0]


def propagate_with_derivative(signal: SignalGrid, zeta: complex, scheme: SchemeId) -> ScatteringResult:
    """
    a, b and da/dzeta from one sweep.

    d Psi/d zeta starts at (-i t_0 psi_1, 0) and follows
    dPsi_{n+1/2} = T' Psi_{n-1/2} + T dPsi_{n-1/2}; then
    da/dzeta = dpsi_1 e^{i zeta t_end} + i t_end a.

    Raises:
        DomainError: scheme is not BO, ES4, TES4 or CT4
    """
    _require_stencil_scheme(scheme)
    return propagate_many(signal, zeta, scheme, with_derivative=True)[0]


def derivative_rk4_romberg(signal: SignalGrid, zeta: complex, levels: int = 4, h0: float = ROMBERG_STEP) -> complex:
    """
    da/dzeta of the RK4 scattering coefficient by Romberg extrapolation.

    Central differences with steps h0, h0/2, ... are combined by
    T_{k,j} = T_{k,j-1} + (T_{k,j-1} - T_{k-1,j-1}) / (4^j - 1).

    Raises:
        DomainError: levels < 2
        OverflowDetected: propagated from the RK4 sweeps
    """
    if levels < 2:
        raise DomainError(f"Romberg extrapolation needs at least 2 levels, got {levels}")
    steps = h0 / 2.0 ** np.arange(levels)
    points = np.concatenate([zeta + steps, zeta - steps])
    state, _ = _sweep_rk4(signal, points.astype(np.complex128), 2 * signal.nodes)
    a = state.restore(state.psi[..., 0])
    table = [[(a[k] - a[levels + k]) / (2 * steps[k])] for k in range(levels)]
    for k in range(1, levels):
        for j in range(1, k + 1):
            previous = table[k][j - 1]
            table[k].append(previous + (previous - table[k - 1][j - 1]) / (4 ** j - 1))
    return complex(table[-1][-1])


def _match(forward: JostState, backward: JostState) -> npt.NDArray[np.complex128]:
    """b = psi_i / phi_i with the larger |phi_i| at the junction."""
    phi_log = backward.log_magnitude()
    if np.any(np.all(phi_log < math.log(MATCH_FLOOR), axis=-1)):
        raise DegenerateMatch("Both components of the right Jost solution vanish at the junction")
    index = np.argmax(np.abs(backward.psi), axis=-1)
    rows = np.arange(len(index))
    ratio = forward.psi[rows, index] / backward.psi[rows, index]
    return _scaled(ratio, forward.log_scale - backward.log_scale)


def _bidirectional_many(
    signal: SignalGrid, zetas: npt.NDArray[np.complex128], scheme: SchemeId
) -> npt.NDArray[np.complex128]:
    nodes = signal.nodes
    if scheme is SchemeId.RK4:
        junction = nodes - nodes % 2
        forward, _ = _sweep_rk4(signal, zetas, junction)
        backward = JostState.right(np.zeros_like(zetas), 0.0, 2 * nodes)
        for n in range(2 * nodes - 2, junction - 1, -2):
            backward.advance(step_rk4(signal, zetas, n, backward=True), steps=-2)
        return _match(forward, backward)

    _require_stencil_scheme(scheme)
    junction = nodes
    forward, _ = _sweep_stencil(signal, zetas, scheme, junction)
    backward = JostState.right(zetas, signal.length + signal.tau / 2, 2 * nodes + 0.5)
    for n in range(2 * nodes, junction - 1, -1):
        backward.advance(transition_inverse(scheme, NodeStencil.from_signal(signal, n, zetas)), steps=-1)
    return _match(forward, backward)


def b_bidirectional(signal: SignalGrid, zeta_k: complex, scheme: SchemeId) -> complex:
    """
    b(zeta_k) at a discrete eigenvalue by matching left and right Jost solutions.

    Psi runs forward from -L - tau/2 and Phi = (0, e^{i zeta t}) runs backward
    from L + tau/2 with T^-1; both meet at the cell boundary next to t = 0,
    where Psi = b Phi. RK4 matches the envelopes at node M (or M - 1).

    Raises:
        DomainError: Im zeta_k <= 0
        DegenerateMatch: both components of Phi fall below 1e-250
    """
    if complex(zeta_k).imag <= 0:
        raise DomainError(f"Bidirectional matching needs Im zeta > 0, got {zeta_k}")
    return complex(_bidirectional_many(signal, _as_zetas(zeta_k), SchemeId(scheme))[0])


def residual(signal: SignalGrid, zeta_k: complex, scheme: SchemeId, levels: int = 4) -> complex:
    """
    Phase coefficient r_k = b(zeta_k) / a'(zeta_k).

    Raises:
        ZeroDerivative: |a'(zeta_k)| < 1e-14
    """
    scheme = SchemeId(scheme)
    b = b_bidirectional(signal, zeta_k, scheme)
    if scheme is SchemeId.RK4:
        da = derivative_rk4_romberg(signal, zeta_k, levels)
    else:
        da = propagate_with_derivative(signal, zeta_k, scheme).da_dzeta
    assert da is not None
    if abs(da) < DERIVATIVE_FLOOR:
        raise ZeroDerivative(f"|a'({zeta_k})| = {abs(da):.3e} is below {DERIVATIVE_FLOOR}")
    return b / da


def _failed(zeta: complex, scheme: SchemeId, signal: SignalGrid, error: Exception) -> ScatteringResult:
    nan = complex(np.nan, np.nan)
    return ScatteringResult(
        zeta=zeta, scheme=scheme, a=nan, b=nan, t_end=signal.length, sigma=signal.sigma, error=str(error)
    )


def _scan_chunk(
    signal: SignalGrid, chunk: npt.NDArray[np.complex128], scheme: SchemeId, record_h: bool
) -> List[ScatteringResult]:
    try:
        return propagate_many(signal, chunk, scheme, record_h=record_h)
    except NumericError as e:
        logger.warning(f"{scheme.value} block of {len(chunk)} points failed ({e}); retrying point by point")
    results = []
    for zeta in chunk:
        try:
            results.append(propagate(signal, complex(zeta), scheme, record_h=record_h))
        except NumericError as e:
            logger.warning(f"{scheme.value} failed at zeta={complex(zeta)}: {e}")
            results.append(_failed(complex(zeta), scheme, signal, e))
    return results


def scan_continuous(
    signal: SignalGrid,
    xi_grid: Sequence[float],
    scheme: SchemeId,
    parallel: bool = False,
    threads: int = 0,
    record_h: bool = False,
) -> List[ScatteringResult]:
    """
    a, b over a grid of real spectral parameters.

    The grid is cut into fixed blocks that are propagated independently;
    with parallel set the blocks run on a thread pool (threads=0 means one
    per CPU). Results land in input order and are identical either way.
    Points that fail carry the error message instead of aborting the scan.

    Raises:
        DomainError: xi_grid is empty
    """
    scheme = SchemeId(scheme)
    xi = np.asarray(xi_grid, dtype=np.float64).ravel()
    if xi.size == 0:
        raise DomainError("Spectral grid is empty")
    zetas = xi.astype(np.complex128)
    chunks = [zetas[i : i + SCAN_CHUNK] for i in range(0, len(zetas), SCAN_CHUNK)]
    slots: List[Optional[List[ScatteringResult]]] = [None] * len(chunks)

    if parallel and len(chunks) > 1:
        workers = threads or os.cpu_count() or 1
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_scan_chunk, signal, chunk, scheme, record_h): i for i, chunk in enumerate(chunks)}
            for future, i in futures.items():
                slots[i] = future.result()
    else:
        for i, chunk in enumerate(chunks):
            slots[i] = _scan_chunk(signal, chunk, scheme, record_h)

    results = [r for block in slots if block is not None for r in block]
    failures = sum(1 for r in results if not r.ok)
    if failures:
        logger.warning(f"{failures} of {len(results)} points failed in the {scheme.value} scan")
    return results
