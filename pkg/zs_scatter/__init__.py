"""Direct Zakharov-Shabat scattering with one-step finite-difference schemes."""

__version__ = "1.0.0"
