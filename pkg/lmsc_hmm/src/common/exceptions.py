"""
Exception hierarchy shared by every area of the package.

Each class also derives from the built-in exception a caller would
naturally catch, so `except ValueError` keeps working around input checks.
"""
from typing import Optional


class LmscHmmError(Exception):
    """Base class for all errors raised by lmsc_hmm."""


class InvalidInputError(LmscHmmError, ValueError):
    """Non-finite amplitudes, mismatched lengths or out-of-range parameters."""


class ConfigError(LmscHmmError, ValueError):
    """An experiment configuration is missing, malformed or out of range."""


class NumericalError(LmscHmmError, ArithmeticError):
    """A numerical procedure cannot produce a meaningful result."""


class IntegrationCoverageError(NumericalError):
    """The integration grid misses a non-negligible part of a density."""


class AmbiguousStationaryError(NumericalError):
    """The Markov chain has no unique stationary distribution."""


class InfiniteDurationError(NumericalError):
    """A state is absorbing, so its mean duration is unbounded."""


class ZeroLikelihoodError(NumericalError):
    """The observation sequence is impossible under the model."""

    def __init__(self, message: str, t: Optional[int] = None):
        super().__init__(message)
        self.t = t


class OracleRangeError(NumericalError):
    """The linear-domain oracle was asked for a sequence it cannot handle."""


class DegenerateSeparationError(NumericalError):
    """Two state densities share the same location, no threshold separates them."""


class FitFailedError(NumericalError):
    """Curve fitting could not find admissible parameters."""


class TraceFormatError(LmscHmmError, ValueError):
    """A measurement or observation CSV does not follow the documented format."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class UnsortedPositionsError(TraceFormatError):
    """Track positions of a trace decrease somewhere."""
