import math

import numpy as np
import pytest

from lmsc_hmm.src.baselines.threshold import (ThresholdClassifier,
                                              average_error_probability,
                                              classify, estimate_from_labels,
                                              labeling_error_share,
                                              moving_average,
                                              optimal_threshold)
from lmsc_hmm.src.common.exceptions import (DegenerateSeparationError,
                                            InvalidInputError)
from lmsc_hmm.src.common.sequences import ObservationSequence, StatePath
from lmsc_hmm.src.distributions.families import Gaussian, Lognormal, Rayleigh
from lmsc_hmm.src.distributions.separability import IntegrationGrid
from lmsc_hmm.src.markov.chain import MarkovChain, simulate

from conftest import BENCHMARK_MATRIX, BENCHMARK_STATIONARY, gaussian_q

MU1_GRID = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def test_optimal_threshold_examples():
    tau = optimal_threshold(0.4, 1.0, 0.2, 1 / 3, 2 / 3)
    assert tau == pytest.approx(0.7 + 0.04 * math.log(0.5) / 0.6, abs=1e-12)
    assert tau == pytest.approx(0.65379, abs=1e-5)
    assert optimal_threshold(0.4, 1.0, 0.2, 0.5, 0.5) == pytest.approx(0.7, abs=1e-15)


def test_optimal_threshold_errors():
    with pytest.raises(DegenerateSeparationError):
        optimal_threshold(0.7, 0.7, 0.2, 0.5, 0.5)
    with pytest.raises(InvalidInputError):
        optimal_threshold(1.0, 0.4, 0.2, 0.5, 0.5)
    with pytest.raises(InvalidInputError):
        optimal_threshold(0.4, 1.0, 0.2, 0.6, 0.6)
    with pytest.raises(InvalidInputError):
        optimal_threshold(0.4, 1.0, 0.2, 0.0, 1.0)


@pytest.mark.parametrize("mu1", MU1_GRID)
def test_optimal_threshold_balances_the_weighted_densities(mu1):
    f1, f2 = Gaussian(mu=mu1, sigma=0.2), Gaussian(mu=1.0, sigma=0.2)
    tau = optimal_threshold(mu1, 1.0, 0.2, *BENCHMARK_STATIONARY)
    assert BENCHMARK_STATIONARY[0] * f1.pdf(tau) == pytest.approx(BENCHMARK_STATIONARY[1] * f2.pdf(tau), rel=1e-6)


@pytest.mark.parametrize("mu1", MU1_GRID)
def test_optimal_threshold_matches_grid_search(mu1):
    f1, f2 = Gaussian(mu=mu1, sigma=0.2), Gaussian(mu=1.0, sigma=0.2)
    grid = IntegrationGrid.covering(f1, f2, intervals=4096)
    # At narrow spacings the optimum leaves [mu1, mu2], so search a wider window.
    candidates = np.arange(mu1 - 0.5, 1.5 + 5e-4, 1e-3)
    errors = [average_error_probability(t, f1, f2, *BENCHMARK_STATIONARY, grid=grid) for t in candidates]
    best = float(candidates[int(np.argmin(errors))])
    assert optimal_threshold(mu1, 1.0, 0.2, *BENCHMARK_STATIONARY) == pytest.approx(best, abs=1e-3)


def test_average_error_probability_matches_q_function():
    f1, f2 = Gaussian(mu=0.4, sigma=0.2), Gaussian(mu=1.0, sigma=0.2)
    p1, p2 = BENCHMARK_STATIONARY
    tau = optimal_threshold(0.4, 1.0, 0.2, p1, p2)
    closed = p1 * gaussian_q((tau - 0.4) / 0.2) + p2 * gaussian_q((1.0 - tau) / 0.2)
    assert average_error_probability(tau, f1, f2, p1, p2) == pytest.approx(closed, abs=1e-6)


def test_average_error_probability_limits():
    f1, f2 = Gaussian(mu=0.4, sigma=0.2), Gaussian(mu=1.0, sigma=0.2)
    assert average_error_probability(100.0, f1, f2, 0.3, 0.7) == pytest.approx(0.7, abs=1e-6)
    assert average_error_probability(-100.0, f1, f2, 0.3, 0.7) == pytest.approx(0.3, abs=1e-6)

    g = Gaussian(mu=1.0, sigma=0.2)
    assert average_error_probability(1.0, g, g, 0.5, 0.5) == pytest.approx(0.5, abs=1e-6)

    with pytest.raises(InvalidInputError):
        average_error_probability(0.7, f1, f2, 0.5, 0.6)


@pytest.mark.parametrize("sigma_log", [1.0, 1.5])
def test_average_error_probability_with_a_wide_lognormal(sigma_log):
    blocked, shadowed = Rayleigh(sigma=0.3), Lognormal(mu_log=0.0, sigma_log=sigma_log)
    expected = 0.5 * blocked.frozen().sf(0.5) + 0.5 * shadowed.frozen().cdf(0.5)
    assert average_error_probability(0.5, blocked, shadowed, 0.5, 0.5) == pytest.approx(expected, abs=1e-6)


def test_moving_average_examples():
    obs = ObservationSequence(amplitudes=[1.0, 2.0, 3.0, 4.0, 5.0])
    np.testing.assert_allclose(moving_average(obs, 3).amplitudes, [1.5, 2.0, 3.0, 4.0, 4.5])
    assert moving_average(obs, 1) is obs

    constant = ObservationSequence(amplitudes=np.full(30, 0.8))
    np.testing.assert_allclose(moving_average(constant, 10).amplitudes, 0.8)


def test_moving_average_even_span_leans_to_the_past():
    obs = ObservationSequence(amplitudes=[0.0, 0.0, 0.0, 4.0, 0.0, 0.0])
    filtered = moving_average(obs, 4)
    # window of sample t is [t - 2, t + 1]
    np.testing.assert_allclose(filtered.amplitudes, [0.0, 0.0, 1.0, 1.0, 1.0, 4.0 / 3.0])
    assert filtered.source["filter_span"] == 4
    assert len(filtered) == len(obs)


def test_moving_average_rejects_bad_spans():
    obs = ObservationSequence(amplitudes=[1.0, 2.0])
    with pytest.raises(InvalidInputError):
        moving_average(obs, 0)
    with pytest.raises(InvalidInputError):
        moving_average(obs, 3)


def test_classify_two_states():
    classifier = ThresholdClassifier(thresholds=(0.65379,))
    path = classify(classifier, ObservationSequence(amplitudes=[0.3, 0.9]))
    np.testing.assert_array_equal(path.one_based(), [1, 2])

    on_threshold = classify(classifier, ObservationSequence(amplitudes=[0.65379, 0.65379]))
    np.testing.assert_array_equal(on_threshold.one_based(), [2, 2])


def test_classify_three_states_and_order():
    obs = ObservationSequence(amplitudes=[0.1, 0.5, 1.2, 0.2, 2.0])
    ordered = classify(ThresholdClassifier(thresholds=(0.3, 1.0)), obs)
    np.testing.assert_array_equal(ordered.one_based(), [1, 2, 3, 1, 3])

    remapped = classify(ThresholdClassifier(thresholds=(0.3, 1.0), state_order=(2, 0, 1)), obs)
    np.testing.assert_array_equal(remapped.one_based(), [3, 1, 2, 3, 2])


def test_classifier_validation():
    with pytest.raises(InvalidInputError):
        ThresholdClassifier(thresholds=(1.0, 0.5))
    with pytest.raises(InvalidInputError):
        ThresholdClassifier(thresholds=(0.5,), filter_span=0)
    with pytest.raises(InvalidInputError):
        ThresholdClassifier(thresholds=(0.5,), state_order=(0, 0))


def test_from_mixture_reproduces_the_weights():
    low, high = Gaussian(mu=0.4, sigma=0.2), Gaussian(mu=1.0, sigma=0.2)
    rng = np.random.default_rng(11)
    labels = rng.random(200_000) < 1 / 3
    amplitudes = np.where(labels, low.sample(rng, size=labels.size), high.sample(rng, size=labels.size))

    # High-amplitude component listed first: its label must stay state 1.
    classifier = ThresholdClassifier.from_mixture([2 / 3, 1 / 3], [high, low])
    assert classifier.state_order == (1, 0)
    path = classify(classifier, ObservationSequence(amplitudes=amplitudes))
    frequencies = np.bincount(path.states, minlength=2) / path.states.size
    np.testing.assert_allclose(frequencies, [2 / 3, 1 / 3], atol=0.01)


def test_estimate_from_labels_examples():
    estimate = estimate_from_labels(StatePath.from_one_based([1, 1, 2, 2], 2))
    np.testing.assert_allclose(estimate.chain.transition_matrix, [[0.5, 0.5], [0.0, 1.0]])
    np.testing.assert_allclose(estimate.chain.initial_probabilities, [0.5, 0.5])
    assert estimate.unvisited == ()

    constant = estimate_from_labels(StatePath.from_one_based([1, 1, 1, 1], 2))
    np.testing.assert_allclose(constant.chain.transition_matrix, [[1.0, 0.0], [0.5, 0.5]])
    assert constant.unvisited == (2,)

    with pytest.raises(InvalidInputError):
        estimate_from_labels(StatePath.from_one_based([1], 2))


def test_estimate_from_labels_rows_normalize(rng):
    path = StatePath(states=rng.integers(0, 3, size=500), n_states=3)
    chain = estimate_from_labels(path).chain
    np.testing.assert_allclose(chain.transition_matrix.sum(axis=1), 1.0, atol=1e-12)
    assert chain.initial_probabilities.sum() == pytest.approx(1.0, abs=1e-12)


def test_labeling_error_share():
    truth = StatePath.from_one_based([1, 2, 2, 1], 2)
    assert labeling_error_share(truth, truth) == 0.0
    assert labeling_error_share(truth, StatePath.from_one_based([2, 1, 1, 2], 2)) == 1.0
    assert labeling_error_share(truth, StatePath.from_one_based([1, 1, 2, 1], 2)) == 0.25
    with pytest.raises(InvalidInputError):
        labeling_error_share(truth, StatePath.from_one_based([1, 2], 2))


def _t1_error_share(mu1: float, seed: int) -> float:
    emissions = (Gaussian(mu=mu1, sigma=0.2), Gaussian(mu=1.0, sigma=0.2))
    path, obs = simulate(MarkovChain(BENCHMARK_MATRIX, BENCHMARK_STATIONARY), emissions, 100_000,
                         np.random.default_rng(seed))
    tau = optimal_threshold(mu1, 1.0, 0.2, *BENCHMARK_STATIONARY)
    return labeling_error_share(path, classify(ThresholdClassifier(thresholds=(tau,)), obs))


@pytest.mark.slow
@pytest.mark.parametrize("seed", [2009, 2010, 2011])
def test_t1_error_share_grows_as_separation_shrinks(seed):
    shares = [_t1_error_share(mu1, seed) for mu1 in MU1_GRID]
    assert all(b >= a for a, b in zip(shares, shares[1:]))
    assert shares[-1] == pytest.approx(1 / 3, abs=0.03)
