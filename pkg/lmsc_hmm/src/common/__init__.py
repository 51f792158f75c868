from .exceptions import (AmbiguousStationaryError, ConfigError,
                         DegenerateSeparationError, FitFailedError,
                         InfiniteDurationError, IntegrationCoverageError,
                         InvalidInputError, LmscHmmError, NumericalError,
                         OracleRangeError, TraceFormatError,
                         UnsortedPositionsError, ZeroLikelihoodError)
from .seeds import spawn_seeds
from .sequences import ObservationSequence, StatePath

__all__ = [
    "AmbiguousStationaryError",
    "ConfigError",
    "DegenerateSeparationError",
    "FitFailedError",
    "InfiniteDurationError",
    "IntegrationCoverageError",
    "InvalidInputError",
    "LmscHmmError",
    "NumericalError",
    "ObservationSequence",
    "OracleRangeError",
    "StatePath",
    "TraceFormatError",
    "UnsortedPositionsError",
    "ZeroLikelihoodError",
    "spawn_seeds",
]
