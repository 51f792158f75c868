import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from lmsc_hmm.src.common.exceptions import (IntegrationCoverageError,
                                            InvalidInputError)
from lmsc_hmm.src.distributions.families import (Amplitude,
                                                 EmissionDistribution,
                                                 Gaussian)

log = logging.getLogger(__name__)

MIN_INTERVALS = 4096
COVERAGE_FLOOR = 0.999
WEIGHT_TOLERANCE = 1e-9
# Smallest left end of a log-spaced grid, relative to its right end.
LOG_GRID_FLOOR = 1e-12


@dataclass(frozen=True)
class IntegrationGrid:
    """
    Composite Simpson grid over [lower, upper].

    A log-spaced grid puts its points geometrically, which resolves heavy
    right tails (wide lognormals) and small-scale densities near zero at the
    same time. It needs lower > 0.

    Attributes:
        lower (float): Left end of the integration range.
        upper (float): Right end of the integration range.
        intervals (int): Number of Simpson intervals, even and at least 4096.
        log_spaced (bool): Geometric instead of uniform spacing.
    """
    lower: float
    upper: float
    intervals: int = 16384
    log_spaced: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)) or self.upper <= self.lower:
            raise InvalidInputError(f"Invalid integration range [{self.lower}, {self.upper}].")
        if self.intervals < MIN_INTERVALS or self.intervals % 2:
            raise InvalidInputError(f"Simpson needs an even interval count >= {MIN_INTERVALS}, got {self.intervals}.")
        if self.log_spaced and self.lower <= 0:
            raise InvalidInputError(f"A log-spaced grid needs a positive left end, got {self.lower}.")

    @classmethod
    def covering(cls, *dists: EmissionDistribution, intervals: int = 16384) -> "IntegrationGrid":
        """
        Builds the grid spanning the 10-sigma-equivalent extents of all densities.

        Any lognormal on a non-negative range switches the grid to log spacing.
        A density whose extent starts at zero then starts at 1e-12 of its own
        right end instead.
        """
        lowers, uppers = zip(*(d.bounds() for d in dists))
        lower, upper = min(lowers), max(uppers)
        if lower >= 0 and any(d.family == "lognormal" for d in dists):
            lower = min(lo if lo > 0 else hi * LOG_GRID_FLOOR for lo, hi in zip(lowers, uppers))
            return cls(lower=lower, upper=upper, intervals=intervals, log_spaced=True)
        return cls(lower=lower, upper=upper, intervals=intervals)

    def span(self, start: float, stop: float) -> np.ndarray:
        """Returns `intervals + 1` points from `start` to `stop` with the grid's spacing."""
        if self.log_spaced:
            return np.geomspace(start, stop, self.intervals + 1)
        return np.linspace(start, stop, self.intervals + 1)

    def points(self) -> np.ndarray:
        return self.span(self.lower, self.upper)


def integrate(values: np.ndarray, points: np.ndarray) -> float:
    if points.size < 2:
        return 0.0
    return float(simpson(values, x=points))


def check_coverage(grid: IntegrationGrid, *dists: EmissionDistribution) -> None:
    """
    Ensures every density integrates to at least 0.999 on the grid.

    Raises:
        IntegrationCoverageError: If a density leaks out of the grid.
    """
    points = grid.points()
    for dist in dists:
        mass = integrate(dist.pdf(points), points)
        if mass < COVERAGE_FLOOR:
            raise IntegrationCoverageError(
                f"Grid [{grid.lower:g}, {grid.upper:g}] holds only {mass:.6f} of {dist}."
            )


def bhattacharyya(
        f1: EmissionDistribution, f2: EmissionDistribution, grid: Optional[IntegrationGrid] = None
) -> float:
    """
    Computes the Bhattacharyya distance B = -ln ∫ sqrt(f1(r) f2(r)) dr.

    The geometric mean is evaluated as exp((ln f1 + ln f2) / 2) so that tails
    far outside either density contribute exactly zero instead of NaN.

    Args:
        f1 (EmissionDistribution): First density.
        f2 (EmissionDistribution): Second density.
        grid (Optional[IntegrationGrid]): Integration grid, by default the one covering both densities.

    Returns:
        float: The distance, clamped at 0 against small negative quadrature error.

    Raises:
        IntegrationCoverageError: If the grid misses part of either density.
    """
    grid = grid or IntegrationGrid.covering(f1, f2)
    check_coverage(grid, f1, f2)

    points = grid.points()
    integrand = np.exp(0.5 * (f1.log_pdf(points) + f2.log_pdf(points)))
    coefficient = integrate(integrand, points)

    if coefficient <= 0:
        return math.inf

    return max(0.0, -math.log(coefficient))


def gaussian_bhattacharyya(f1: Gaussian, f2: Gaussian) -> float:
    """
    Closed-form Bhattacharyya distance between two univariate Gaussians.
    """
    var = 0.5 * (f1.sigma ** 2 + f2.sigma ** 2)
    return (f1.mu - f2.mu) ** 2 / (8.0 * var) + 0.5 * math.log(var / (f1.sigma * f2.sigma))


def validate_weights(weights: Sequence[float], n_components: int) -> np.ndarray:
    """
    Checks a mixture weight vector against its component count.

    Raises:
        InvalidInputError: On length mismatch, negative entries or a sum off 1 by more than 1e-9.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 1 or weights.size != n_components:
        raise InvalidInputError(f"Got {weights.size} weights for {n_components} components.")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise InvalidInputError(f"Mixture weights must be finite and non-negative, got {weights.tolist()}.")
    if abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
        raise InvalidInputError(f"Mixture weights sum to {weights.sum():.12f}, not 1.")
    return weights


def mixture_pdf(weights: Sequence[float], dists: Sequence[EmissionDistribution], r: Amplitude) -> Amplitude:
    """
    Evaluates the weighted density sum_i w_i f_i(r).
    """
    weights = validate_weights(weights, len(dists))
    total = sum(w * np.asarray(d.pdf(r)) for w, d in zip(weights, dists))
    return float(total) if np.ndim(total) == 0 else total
