"""
Threshold state identification, the comparison method for Baum-Welch.

Samples are labelled by comparing the (optionally moving-average filtered)
amplitude against cut points placed between the state densities. State
labels are ordered by ascending amplitude unless a `state_order` maps them
back onto another state numbering.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from lmsc_hmm.src.common.exceptions import (DegenerateSeparationError,
                                            InvalidInputError)
from lmsc_hmm.src.common.sequences import ObservationSequence, StatePath
from lmsc_hmm.src.distributions.families import EmissionDistribution
from lmsc_hmm.src.distributions.separability import (IntegrationGrid,
                                                     check_coverage,
                                                     integrate,
                                                     validate_weights)
from lmsc_hmm.src.markov.chain import MarkovChain, count_transitions

log = logging.getLogger(__name__)

PRIOR_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ThresholdClassifier:
    """
    Amplitude cut points with an optional moving-average pre-filter.

    Attributes:
        thresholds (Tuple[float, ...]): m - 1 strictly increasing cut points.
        filter_span (int): Moving-average span in samples, 1 disables filtering.
        state_order (Optional[Tuple[int, ...]]): State index (0-based) of each
            amplitude bin, lowest bin first; identity when omitted.
    """
    thresholds: Tuple[float, ...]
    filter_span: int = 1
    state_order: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        thresholds = tuple(float(t) for t in self.thresholds)
        if any(not math.isfinite(t) for t in thresholds):
            raise InvalidInputError(f"Thresholds must be finite, got {thresholds}.")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise InvalidInputError(f"Thresholds must be strictly increasing, got {thresholds}.")
        if self.filter_span < 1:
            raise InvalidInputError(f"filter_span must be at least 1, got {self.filter_span}.")
        object.__setattr__(self, "thresholds", thresholds)

        if self.state_order is not None:
            order = tuple(int(k) for k in self.state_order)
            if sorted(order) != list(range(len(thresholds) + 1)):
                raise InvalidInputError(f"state_order must permute 0..{len(thresholds)}, got {order}.")
            object.__setattr__(self, "state_order", order)

    @property
    def m(self) -> int:
        return len(self.thresholds) + 1

    @classmethod
    def from_mixture(
            cls,
            weights: Sequence[float],
            components: Sequence[EmissionDistribution],
            filter_span: int = 1,
    ) -> "ThresholdClassifier":
        """
        Places cut points at quantiles of a fitted mixture.

        Components are ranked by mean amplitude; the k-th cut is the mixture
        quantile at the summed weight of the k lowest components, so the
        labelled state frequencies reproduce the mixture weights.
        """
        weights = validate_weights(weights, len(components))
        order = np.argsort([c.mean() for c in components], kind="stable")
        cumulative = np.cumsum(weights[order])[:-1]

        lowers, uppers = zip(*(c.bounds() for c in components))
        lower, upper = min(lowers), max(uppers)

        def mixture_cdf(r: float) -> float:
            return float(sum(w * c.cdf(r) for w, c in zip(weights, components)))

        thresholds = []
        for q in np.clip(cumulative, 1e-12, 1.0 - 1e-12):
            thresholds.append(brentq(lambda r: mixture_cdf(r) - q, lower, upper, xtol=1e-12))

        log.debug(f"Mixture quantile thresholds: {thresholds} (state order {order.tolist()})")

        return cls(thresholds=tuple(thresholds), filter_span=filter_span, state_order=tuple(order.tolist()))


@dataclass(frozen=True)
class LabelEstimate:
    """
    Markov chain counted from a labelled path.

    Attributes:
        chain (MarkovChain): Empirical transition matrix and state frequencies.
        unvisited (Tuple[int, ...]): 1-based states without outgoing transitions, given uniform rows.
    """
    chain: MarkovChain
    unvisited: Tuple[int, ...] = ()


def _validate_priors(p1: float, p2: float) -> None:
    if p1 < 0 or p2 < 0 or abs(p1 + p2 - 1.0) > PRIOR_TOLERANCE:
        raise InvalidInputError(f"Priors must be non-negative and sum to 1, got ({p1}, {p2}).")


def optimal_threshold(mu1: float, mu2: float, sigma: float, p1: float, p2: float) -> float:
    """
    Threshold minimizing the average error probability of two equal-variance Gaussians.

        tau = (mu1 + mu2) / 2 + sigma^2 ln(p1 / p2) / (mu2 - mu1)

    Raises:
        DegenerateSeparationError: If mu1 == mu2.
        InvalidInputError: If mu1 > mu2, sigma <= 0 or the priors are invalid.
    """
    if mu1 == mu2:
        raise DegenerateSeparationError(f"Both states have mean {mu1}, no threshold separates them.")
    if mu1 > mu2:
        raise InvalidInputError(f"State 1 must have the lower mean, got mu1={mu1} > mu2={mu2}.")
    if not sigma > 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}.")
    _validate_priors(p1, p2)
    if p1 == 0 or p2 == 0:
        raise InvalidInputError("Both priors must be strictly positive.")

    return 0.5 * (mu1 + mu2) + sigma ** 2 * math.log(p1 / p2) / (mu2 - mu1)


def average_error_probability(
        tau: float,
        f1: EmissionDistribution,
        f2: EmissionDistribution,
        p1: float,
        p2: float,
        grid: Optional[IntegrationGrid] = None,
) -> float:
    """
    Misclassification probability p1 ∫_tau^inf f1 + p2 ∫_-inf^tau f2, integrated numerically.

    Raises:
        IntegrationCoverageError: If the grid misses part of either density.
    """
    _validate_priors(p1, p2)
    grid = grid or IntegrationGrid.covering(f1, f2)
    check_coverage(grid, f1, f2)

    cut = min(max(tau, grid.lower), grid.upper)
    below = grid.span(grid.lower, cut)
    above = grid.span(cut, grid.upper)

    miss_1 = integrate(f1.pdf(above), above) if cut < grid.upper else 0.0
    miss_2 = integrate(f2.pdf(below), below) if cut > grid.lower else 0.0

    return float(min(1.0, max(0.0, p1 * miss_1 + p2 * miss_2)))


def moving_average(obs: ObservationSequence, span: int) -> ObservationSequence:
    """
    Centered moving average with windows shrinking at the sequence edges.

    Sample t averages indices [t - span // 2, t + span - 1 - span // 2], clipped
    to the sequence, so odd spans are symmetric and even spans lean one sample
    to the past. The output keeps length n.

    Raises:
        InvalidInputError: If span < 1 or span > n.
    """
    n = len(obs)
    if span < 1 or span > n:
        raise InvalidInputError(f"Moving-average span must lie in [1, {n}], got {span}.")
    if span == 1:
        return obs

    left = span // 2
    right = span - 1 - left
    index = np.arange(n)
    lo = np.maximum(index - left, 0)
    hi = np.minimum(index + right, n - 1)

    cumulative = np.concatenate(([0.0], np.cumsum(obs.amplitudes)))
    averaged = (cumulative[hi + 1] - cumulative[lo]) / (hi - lo + 1)

    return obs.with_amplitudes(averaged, filter_span=span, filter_alignment="centered")


def classify(classifier: ThresholdClassifier, obs: ObservationSequence) -> StatePath:
    """
    Labels every sample with the amplitude bin it falls in.

    A sample equal to a threshold goes to the upper bin.
    """
    filtered = moving_average(obs, classifier.filter_span) if classifier.filter_span > 1 else obs
    bins = np.searchsorted(np.asarray(classifier.thresholds), filtered.amplitudes, side="right")

    if classifier.state_order is not None:
        bins = np.asarray(classifier.state_order)[bins]

    return StatePath(states=bins, n_states=classifier.m)


def estimate_from_labels(path: StatePath, m: Optional[int] = None) -> LabelEstimate:
    """
    Counts transition probabilities and state frequencies along a labelled path.

    p_ij = count(i -> j) / count(i -> .), p_i = share of samples in state i.
    States that never leave (no outgoing transition) get a uniform row and are
    reported in `unvisited`.

    Raises:
        InvalidInputError: If the path has fewer than two samples or labels reach m.
    """
    m = path.n_states if m is None else m
    if len(path) < 2:
        raise InvalidInputError(f"Need at least 2 labels to count transitions, got {len(path)}.")
    counts = count_transitions(StatePath(states=path.states, n_states=m)).astype(float)
    outgoing = counts.sum(axis=1)
    unvisited = np.flatnonzero(outgoing == 0)
    if unvisited.size:
        log.warning(f"States {(unvisited + 1).tolist()} have no outgoing transitions, rows set uniform.")

    rows = np.where(outgoing[:, None] > 0, counts / np.where(outgoing > 0, outgoing, 1.0)[:, None], 1.0 / m)
    frequencies = np.bincount(path.states, minlength=m).astype(float) / len(path)

    return LabelEstimate(
        chain=MarkovChain(rows, frequencies),
        unvisited=tuple((unvisited + 1).tolist()),
    )


def labeling_error_share(truth: StatePath, estimate: StatePath) -> float:
    """
    Share of time steps where the estimated state differs from the true one.

    Raises:
        InvalidInputError: If the paths differ in length.
    """
    if len(truth) != len(estimate):
        raise InvalidInputError(f"Paths differ in length: {len(truth)} vs {len(estimate)}.")
    if len(truth) == 0:
        return 0.0
    return float(np.mean(truth.states != estimate.states))
