"""
Uniform-grid potentials q(t) and the Zakharov-Shabat system matrix.

The grid is t_n = -L + tau*n, n = 0..2M, tau = L/M. Samples outside the grid
read as zero: the potential is assumed to have decayed beyond [-L, L].
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt
import pandas as pd

from ..errors import EvenSampleCount, NonUniformGrid, ParseError
from .linalg2 import ComplexLike, ComplexMatrix2, from_entries

logger = logging.getLogger(__name__)

SIGNAL_COLUMNS = ["t", "re", "im"]
GRID_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ChirpedSechParams:
    """Parameters of q(t) = A * sech(t)^(1 + iC)."""

    amplitude: float
    chirp: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be non-negative, got {self.amplitude}")

    @property
    def detuning_squared(self) -> float:
        """A^2 - C^2/4 (anomalous dispersion)."""
        return self.amplitude ** 2 - self.chirp ** 2 / 4


@dataclass(frozen=True, eq=False)
class SignalGrid:
    """Immutable samples of q on the uniform grid of 2M + 1 nodes."""

    samples: npt.NDArray[np.complex128]
    length: float
    nodes: int
    sigma: int = 1
    _padded: npt.NDArray[np.complex128] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.complex128)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.nodes < 1:
            raise ValueError(f"M must be at least 1, got {self.nodes}")
        if samples.shape != (2 * self.nodes + 1,):
            raise ValueError(f"expected {2 * self.nodes + 1} samples, got {samples.shape}")
        if self.sigma not in (1, -1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        padded = np.concatenate(([0j], samples, [0j]))
        padded.setflags(write=False)
        object.__setattr__(self, "_padded", padded)

    @property
    def tau(self) -> float:
        return self.length / self.nodes

    @property
    def size(self) -> int:
        return 2 * self.nodes + 1

    @property
    def times(self) -> npt.NDArray[np.float64]:
        return grid_times(self.length, self.nodes)

    @property
    def q_max(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def sample(self, n: int) -> complex:
        """q_n with zero outside 0..2M."""
        if 0 <= n < self.size:
            return complex(self.samples[n])
        return 0j

    def stencil_samples(self, n: int) -> Tuple[complex, complex, complex]:
        """(q_{n-1}, q_n, q_{n+1}) through the zero-padded accessor."""
        return complex(self._padded[n]), complex(self._padded[n + 1]), complex(self._padded[n + 2])

    def energy(self) -> float:
        """C0 = integral of |q|^2 dt by the trapezoid rule."""
        return float(np.trapezoid(np.abs(self.samples) ** 2, dx=self.tau))


def grid_times(length: float, nodes: int) -> npt.NDArray[np.float64]:
    """Grid nodes, symmetric about zero with exact end points -L and L."""
    tau = length / nodes
    times = tau * (np.arange(2 * nodes + 1) - nodes)
    times[0] = -length
    times[-1] = length
    return times


def log_sech(t: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """ln sech(t) = ln 2 - |t| - ln(1 + e^{-2|t|}); no overflow for large |t|."""
    at = np.abs(np.asarray(t, dtype=np.float64))
    return np.log(2.0) - at - np.log1p(np.exp(-2.0 * at))


def chirped_sech_values(params: ChirpedSechParams, t: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """q(t) = A exp((1 + iC) ln sech t)."""
    return params.amplitude * np.exp((1 + 1j * params.chirp) * log_sech(t))


def chirped_sech(params: ChirpedSechParams, length: float, nodes: int, sigma: int = 1) -> SignalGrid:
    """
    Sample the chirped hyperbolic secant on the uniform grid.

    Args:
        params: amplitude A and chirp C
        length: half-width L of the interval
        nodes: M, the grid has 2M + 1 points
        sigma: dispersion sign attached to the signal

    Returns:
        SignalGrid with q_n = A sech(t_n)^(1 + iC)
    """
    if length <= 0:
        raise ValueError(f"L must be positive, got {length}")
    if nodes < 1:
        raise ValueError(f"M must be at least 1, got {nodes}")
    samples = chirped_sech_values(params, grid_times(length, nodes))
    return SignalGrid(samples=samples, length=length, nodes=nodes, sigma=sigma)


def chirped_sech_derivatives(
    params: ChirpedSechParams, t: npt.ArrayLike
) -> Tuple[npt.NDArray[np.complex128], ...]:
    """
    Closed-form (q, q', q'', q''') of the chirped secant at times t.

    With u = ln sech t and p = 1 + iC: q' = q p u', q'' = q (p^2 u'^2 + p u''),
    q''' = q (p^3 u'^3 + 3 p^2 u' u'' + p u''').
    """
    t = np.asarray(t, dtype=np.float64)
    p = 1 + 1j * params.chirp
    q = chirped_sech_values(params, t)
    th = np.tanh(t)
    sech2 = np.exp(2 * log_sech(t))
    u1 = -th
    u2 = -sech2
    u3 = 2 * sech2 * th
    q1 = q * p * u1
    q2 = q * (p ** 2 * u1 ** 2 + p * u2)
    q3 = q * (p ** 3 * u1 ** 3 + 3 * p ** 2 * u1 * u2 + p * u3)
    return q, q1, q2, q3


def q_matrix(q_n: ComplexLike, zeta: ComplexLike, sigma: int) -> ComplexMatrix2:
    """Q = [[-i zeta, q], [-sigma q*, i zeta]], broadcast over q_n and zeta."""
    q_n = np.asarray(q_n, dtype=np.complex128)
    zeta = np.asarray(zeta, dtype=np.complex128)
    return from_entries(-1j * zeta, q_n, -sigma * np.conj(q_n), 1j * zeta)


def save_signal(signal: SignalGrid, path: Union[str, Path]) -> Path:
    """Write the signal as CSV rows t,re,im with 17 significant digits."""
    path = Path(path)
    df = pd.DataFrame(
        {
            "t": signal.times,
            "re": signal.samples.real,
            "im": signal.samples.imag,
        }
    )
    df.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Saved {signal.size} samples to {path}")
    return path


def load_signal(path: Union[str, Path], sigma: int = 1) -> SignalGrid:
    """
    Read a CSV signal file with header t,re,im.

    Args:
        path: CSV file path
        sigma: dispersion sign attached to the signal

    Returns:
        SignalGrid with L and M inferred from the time column

    Raises:
        ParseError: malformed file or row
        EvenSampleCount: row count is even
        NonUniformGrid: spacing deviates from tau by more than 1e-9 tau
    """
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"Signal file {path} does not exist")
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"Cannot parse signal file {path}: {e}") from e

    df.columns = df.columns.str.strip().str.lower()
    missing = [c for c in SIGNAL_COLUMNS if c not in df.columns]
    if missing:
        raise ParseError(f"Signal file {path} lacks columns {missing}")

    try:
        values = df[SIGNAL_COLUMNS].apply(pd.to_numeric, errors="raise").to_numpy(dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise ParseError(f"Non-numeric value in {path}: {e}") from e
    if not np.all(np.isfinite(values)):
        bad_row = int(np.argmax(~np.all(np.isfinite(values), axis=1)))
        raise ParseError(f"Row {bad_row + 1} of {path} is incomplete or not finite")

    rows = len(values)
    if rows % 2 == 0:
        raise EvenSampleCount(f"{path} has {rows} rows; a grid needs 2M + 1")
    if rows < 3:
        raise ParseError(f"{path} has {rows} rows; at least 3 are required")

    t = values[:, 0]
    nodes = (rows - 1) // 2
    tau = (t[-1] - t[0]) / (2 * nodes)
    if tau <= 0:
        raise NonUniformGrid(f"Time column of {path} is not increasing")
    deviation = np.max(np.abs(np.diff(t) - tau))
    if deviation > GRID_TOLERANCE * tau:
        raise NonUniformGrid(f"Grid spacing of {path} deviates by {deviation:.3e} (tau = {tau:.6e})")
    if abs(t[0] + t[-1]) > GRID_TOLERANCE * tau:
        logger.warning(f"Signal in {path} is not centred at t = 0; treating it as [-L, L]")

    length = tau * nodes
    samples = values[:, 1] + 1j * values[:, 2]
    logger.info(f"Loaded {rows} samples from {path} (L={length:g}, M={nodes})")
    return SignalGrid(samples=samples, length=length, nodes=nodes, sigma=sigma)
