"""
Exception hierarchy for zs-scatter.

ConfigError subclasses describe bad input (CLI exit code 2),
NumericError subclasses describe numeric failure (CLI exit code 3).
"""


class ZSScatterError(Exception):
    """Base class for all package errors."""


class ConfigError(ZSScatterError, ValueError):
    """Invalid configuration or input data."""


class ParseError(ConfigError):
    """Malformed row in a signal file."""


class NonUniformGrid(ConfigError):
    """Sample times (or spectral grid) are not uniformly spaced."""


class EvenSampleCount(ConfigError):
    """Signal file must hold an odd number (2M + 1) of samples."""


class LengthMismatch(ConfigError):
    """Arrays compared point by point have different lengths."""


class DomainError(ConfigError):
    """Arguments outside the domain where a formula is defined."""


class NoDiscreteSpectrum(ConfigError):
    """The potential has no eigenvalues in the upper half plane."""


class NumericError(ZSScatterError, ArithmeticError):
    """A numeric computation failed."""


class PoleError(NumericError):
    """Gamma function evaluated at a nonpositive integer."""


class SingularCayley(NumericError):
    """The CT4 Cayley factor is not invertible."""


class OverflowDetected(NumericError):
    """Jost solution left the representable floating-point range."""


class DegenerateMatch(NumericError):
    """Both components of the right Jost solution vanish at the junction."""


class ZeroDerivative(NumericError):
    """a'(zeta) is too small to form a phase coefficient."""
