"""
Per-node transition matrices of the one-step schemes.

T at node n maps the layer n - 1/2 to n + 1/2 from the samples q_{n-1}, q_n,
q_{n+1}. Every builder is a pure function of the stencil and broadcasts over
an array of spectral parameters, so all schemes share one propagation loop.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..errors import OverflowDetected, SingularCayley
from .linalg2 import (
    SIGMA3,
    ComplexLike,
    ComplexMatrix2,
    from_entries,
    identity,
    mat_chain,
    mat_det,
    mat_exp,
    mat_exp_derivative,
    mat_inv,
    mat_mul,
)
from .potentials import SignalGrid, q_matrix

logger = logging.getLogger(__name__)

CAYLEY_DET_FLOOR = 1e-14


class SchemeId(str, Enum):
    """Transition construction."""

    BO = "bo"
    ES4 = "es4"
    TES4 = "tes4"
    CT4 = "ct4"
    RK4 = "rk4"
    TAYLOR4 = "taylor4"

    @property
    def has_transition(self) -> bool:
        """RK4 steps the envelope over 2 tau and has no per-node matrix."""
        return self is not SchemeId.RK4

    @property
    def conservative(self) -> bool:
        return self in (SchemeId.BO, SchemeId.ES4, SchemeId.TES4, SchemeId.CT4)

    @property
    def order(self) -> int:
        return 2 if self is SchemeId.BO else 4


# Schemes offered to experiments; TAYLOR4 needs analytic derivatives of q
PRODUCTION_SCHEMES = (SchemeId.BO, SchemeId.ES4, SchemeId.TES4, SchemeId.CT4, SchemeId.RK4)
DERIVATIVE_SCHEMES = (SchemeId.BO, SchemeId.ES4, SchemeId.TES4, SchemeId.CT4)


@dataclass(frozen=True)
class NodeStencil:
    """Samples around node n plus the step, spectral parameter(s) and dispersion sign."""

    q_prev: complex
    q_center: complex
    q_next: complex
    tau: float
    zeta: ComplexLike
    sigma: int = 1

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")

    @classmethod
    def from_signal(cls, signal: SignalGrid, n: int, zeta: ComplexLike) -> "NodeStencil":
        q_prev, q_center, q_next = signal.stencil_samples(n)
        return cls(q_prev, q_center, q_next, signal.tau, zeta, signal.sigma)

    @property
    def generator(self) -> ComplexMatrix2:
        """Q_n at the stencil's spectral parameter(s)."""
        return q_matrix(self.q_center, self.zeta, self.sigma)

    def off_diagonal(self, value: complex) -> ComplexMatrix2:
        """Zeta-free part [[0, d], [-sigma d*, 0]] of a difference of Q matrices."""
        return from_entries(0, value, -self.sigma * np.conj(value), 0)

    @property
    def first_difference(self) -> ComplexMatrix2:
        """Q_{n+1} - Q_{n-1} = 2 tau Q^(1) + O(tau^3)."""
        return self.off_diagonal(self.q_next - self.q_prev)

    @property
    def second_difference(self) -> ComplexMatrix2:
        """Q_{n+1} - 2 Q_n + Q_{n-1} = tau^2 Q^(2) + O(tau^4)."""
        return self.off_diagonal(self.q_next - 2 * self.q_center + self.q_prev)


TransitionPair = Tuple[ComplexMatrix2, Optional[ComplexMatrix2]]


def _zeta_direction(scale: float, like: ComplexMatrix2) -> ComplexMatrix2:
    """d/dzeta of (scale * Q_n) = -i scale sigma_3, broadcast to the batch."""
    return np.broadcast_to(-1j * scale * SIGMA3, like.shape)


def _bo(st: NodeStencil, with_derivative: bool) -> TransitionPair:
    argument = st.tau * st.generator
    t = mat_exp(argument)
    if not with_derivative:
        return t, None
    return t, mat_exp_derivative(argument, _zeta_direction(st.tau, argument))


def _es4_argument(st: NodeStencil) -> ComplexMatrix2:
    """tau F1 + tau^3 F3 with the derivatives of Q replaced by central differences."""
    q = st.generator
    d1 = st.first_difference
    return st.tau * q + st.tau / 24 * st.second_difference + st.tau ** 2 / 24 * (mat_mul(d1, q) - mat_mul(q, d1))


def _es4(st: NodeStencil, with_derivative: bool) -> TransitionPair:
    argument = _es4_argument(st)
    t = mat_exp(argument)
    if not with_derivative:
        return t, None
    d1 = np.broadcast_to(st.first_difference, argument.shape)
    dq = _zeta_direction(1.0, argument)
    direction = -1j * st.tau * SIGMA3 + st.tau ** 2 / 24 * (mat_mul(d1, dq) - mat_mul(dq, d1))
    return t, mat_exp_derivative(argument, direction)


def _tes4_outer(st: NodeStencil) -> Tuple[ComplexMatrix2, ComplexMatrix2]:
    """exp{tau^2/12 Q^(1) + tau^3/48 Q^(2)} and exp{-tau^2/12 Q^(1) + tau^3/48 Q^(2)}."""
    d1 = st.tau / 24 * st.first_difference
    d2 = st.tau / 48 * st.second_difference
    return mat_exp(d1 + d2), mat_exp(d2 - d1)


def _tes4(st: NodeStencil, with_derivative: bool) -> TransitionPair:
    left, right = _tes4_outer(st)
    argument = st.tau * st.generator
    t = mat_chain(left, mat_exp(argument), right)
    if not with_derivative:
        return t, None
    middle = mat_exp_derivative(argument, _zeta_direction(st.tau, argument))
    return t, mat_chain(left, middle, right)


def _ct4(st: NodeStencil, with_derivative: bool) -> TransitionPair:
    q = st.generator
    tau = st.tau
    half = mat_exp(tau / 2 * q)
    forward = mat_exp(tau * q)
    backward = mat_exp(-tau * q)
    up = st.off_diagonal(st.q_next - st.q_center)
    down = st.off_diagonal(st.q_prev - st.q_center)

    m_up = mat_chain(backward, np.broadcast_to(up, q.shape), forward)
    m_down = mat_chain(forward, np.broadcast_to(down, q.shape), backward)
    x = tau / 48 * (m_up + m_down)
    eye = identity(q.shape[:-2])
    denominator = eye - x
    det = mat_det(denominator)
    if np.any(np.abs(det) < CAYLEY_DET_FLOOR):
        raise SingularCayley(f"CT4 Cayley factor is singular (min |det| = {np.min(np.abs(det)):.3e})")
    cayley = mat_mul(mat_inv(denominator), eye + x)
    t = mat_chain(half, cayley, half)
    if not with_derivative:
        return t, None

    d_half = mat_exp_derivative(tau / 2 * q, _zeta_direction(tau / 2, q))
    d_forward = mat_exp_derivative(tau * q, _zeta_direction(tau, q))
    d_backward = mat_exp_derivative(-tau * q, _zeta_direction(-tau, q))
    d_m_up = mat_chain(d_backward, up, forward) + mat_chain(backward, up, d_forward)
    d_m_down = mat_chain(d_forward, down, backward) + mat_chain(forward, down, d_backward)
    dx = tau / 48 * (d_m_up + d_m_down)
    # (C^-1 B)' = C^-1 X' (I + C^-1 B) for C = I - X, B = I + X
    d_cayley = mat_chain(mat_inv(denominator), dx, eye + cayley)
    dt = mat_chain(d_half, cayley, half) + mat_chain(half, d_cayley, half) + mat_chain(half, cayley, d_half)
    return t, dt


_BUILDERS: Dict[SchemeId, Callable[[NodeStencil, bool], TransitionPair]] = {
    SchemeId.BO: _bo,
    SchemeId.ES4: _es4,
    SchemeId.TES4: _tes4,
    SchemeId.CT4: _ct4,
}


def _builder(scheme: SchemeId) -> Callable[[NodeStencil, bool], TransitionPair]:
    try:
        return _BUILDERS[SchemeId(scheme)]
    except KeyError:
        raise ValueError(f"Scheme {scheme} has no stencil transition matrix") from None


def transition_bo(st: NodeStencil) -> ComplexMatrix2:
    """Boffetta-Osborne: T = exp(tau Q_n)."""
    return _bo(st, False)[0]


def transition_es4(st: NodeStencil) -> ComplexMatrix2:
    """Exponential fourth-order scheme: T = exp(tau F1 + tau^3 F3)."""
    return _es4(st, False)[0]


def transition_tes4(st: NodeStencil) -> ComplexMatrix2:
    """Triple-exponential fourth-order scheme; zeta enters only the middle factor."""
    return _tes4(st, False)[0]


def transition_ct4(st: NodeStencil) -> ComplexMatrix2:
    """
    Conservative transformed fourth-order scheme.

    T = e^{tau/2 Q_n} [I - tau/48 (M+ + M-)]^-1 [I + tau/48 (M+ + M-)] e^{tau/2 Q_n},
    M+ = e^{-tau Q_n} (Q_{n+1} - Q_n) e^{tau Q_n}, M- = e^{tau Q_n} (Q_{n-1} - Q_n) e^{-tau Q_n}.

    Raises:
        SingularCayley: |det(I - tau/48 (M+ + M-))| < 1e-14
    """
    return _ct4(st, False)[0]


def transition(scheme: SchemeId, st: NodeStencil) -> ComplexMatrix2:
    """Dispatch to the transition builder of a stencil scheme."""
    return _builder(scheme)(st, False)[0]


def transition_with_derivative(scheme: SchemeId, st: NodeStencil) -> Tuple[ComplexMatrix2, ComplexMatrix2]:
    """T and dT/dzeta from one set of exponentials."""
    t, dt = _builder(scheme)(st, True)
    assert dt is not None
    return t, dt


def transition_zeta_derivative(scheme: SchemeId, st: NodeStencil) -> ComplexMatrix2:
    """
    dT/dzeta for BO, ES4, TES4 and CT4.

    BO and ES4 differentiate the exponential through its Pauli coefficients,
    TES4 differentiates the middle factor only, CT4 applies the product rule
    to its factorisation.
    """
    return transition_with_derivative(scheme, st)[1]


def transition_inverse(scheme: SchemeId, st: NodeStencil) -> ComplexMatrix2:
    """T^-1, from negated exponents for the exponential schemes."""
    scheme = SchemeId(scheme)
    if scheme is SchemeId.BO:
        return mat_exp(-st.tau * st.generator)
    if scheme is SchemeId.ES4:
        return mat_exp(-_es4_argument(st))
    if scheme is SchemeId.TES4:
        left, right = _tes4_outer(st)
        return mat_chain(mat_inv(right), mat_exp(-st.tau * st.generator), mat_inv(left))
    if scheme is SchemeId.CT4:
        return mat_inv(transition_ct4(st))
    raise ValueError(f"Scheme {scheme} has no stencil transition matrix")


def _q_derivative_matrix(value: complex, sigma: int) -> ComplexMatrix2:
    return from_entries(0, value, -sigma * np.conj(value), 0)


def transition_taylor4(
    st: NodeStencil,
    derivatives: Tuple[complex, complex, complex],
    s: float = 0.5,
) -> ComplexMatrix2:
    """
    Reference transition operator E + tau Q + tau^2 T2 + tau^3 T3 + tau^4 T4.

    Built from the Taylor expansions of x about the point t with
    t_n = t + (s - 1) tau and t_{n+1} = t + s tau, using analytic derivatives
    (q', q'', q''') at t. s = 1/2 is the symmetric case where Q^(3) drops out.
    Used only as an order oracle.
    """
    q = st.generator
    d1, d2, d3 = (_q_derivative_matrix(v, st.sigma) for v in derivatives)
    d1, d2, d3 = (np.broadcast_to(d, q.shape) for d in (d1, d2, d3))

    q2 = mat_mul(q, q)
    q3 = mat_mul(q2, q)
    q4 = mat_mul(q3, q)
    qk = {
        1: q,
        2: d1 + q2,
        3: d2 + 2 * mat_mul(d1, q) + mat_mul(q, d1) + q3,
        4: (
            d3
            + 3 * mat_mul(d2, q)
            + mat_mul(q, d2)
            + 3 * mat_mul(d1, d1)
            + 3 * mat_mul(d1, q2)
            + 2 * mat_chain(q, d1, q)
            + mat_mul(q2, d1)
            + q4
        ),
    }
    s_bar = s - 1
    factorial = {1: 1, 2: 2, 3: 6, 4: 24}
    lhs = {k: s ** k / factorial[k] * qk[k] for k in qk}
    rhs = {k: s_bar ** k / factorial[k] * qk[k] for k in qk}

    terms: Dict[int, ComplexMatrix2] = {}
    for k in range(1, 5):
        term = lhs[k] - rhs[k]
        for j in range(1, k):
            term = term - mat_mul(terms[j], rhs[k - j])
        terms[k] = term

    result = identity(q.shape[:-2])
    for k in range(1, 5):
        result = result + st.tau ** k * terms[k]
    return result


def envelope_generator(q_n: complex, t: float, zeta: ComplexLike, sigma: int) -> ComplexMatrix2:
    """R(t) of d chi/dt = R chi for chi_1 = psi_1 e^{i zeta t}, chi_2 = psi_2 e^{-i zeta t}."""
    zeta = np.asarray(zeta, dtype=np.complex128)
    with np.errstate(over="ignore", invalid="ignore"):
        phase = np.exp(2j * zeta * t)
        return from_entries(0, q_n * phase, -sigma * np.conj(q_n) / phase, 0)


def _rk4_update(r_start: ComplexMatrix2, r_mid: ComplexMatrix2, r_end: ComplexMatrix2, half_step: float):
    eye = identity(r_start.shape[:-2])
    k1 = r_start
    k2 = mat_mul(r_mid, eye + half_step * k1)
    k3 = mat_mul(r_mid, eye + half_step * k2)
    k4 = mat_mul(r_end, eye + 2 * half_step * k3)
    return eye + (2 * half_step / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def step_rk4(signal: SignalGrid, zeta: ComplexLike, n: int, backward: bool = False) -> ComplexMatrix2:
    """
    Classical RK4 step of the envelope system between t_n and t_{n+2}.

    The half-step equals the grid step tau, so the stages use q_n, q_{n+1}
    and q_{n+2}. The ODE is linear, so the step is returned as the matrix
    that maps chi(t_n) to chi(t_{n+2}), or chi(t_{n+2}) to chi(t_n) when
    backward is set.

    Raises:
        IndexError: n + 2 is past the grid end
        OverflowDetected: the envelope generator is not representable
    """
    if n < 0 or n + 2 > 2 * signal.nodes:
        raise IndexError(f"RK4 step from node {n} leaves the grid of {signal.size} nodes")
    times = signal.times
    r0, r1, r2 = (
        envelope_generator(signal.sample(n + j), times[n + j], zeta, signal.sigma) for j in range(3)
    )
    if not all(np.all(np.isfinite(r)) for r in (r0, r1, r2)):
        raise OverflowDetected(f"Envelope generator overflows near t = {times[n]:g}")
    if backward:
        return _rk4_update(r2, r1, r0, -signal.tau)
    return _rk4_update(r0, r1, r2, signal.tau)
