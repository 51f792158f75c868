import math

import numpy as np
import pytest

from lmsc_hmm.src.common.exceptions import (InvalidInputError,
                                            OracleRangeError,
                                            ZeroLikelihoodError)
from lmsc_hmm.src.common.sequences import ObservationSequence
from lmsc_hmm.src.distributions.families import Gaussian, Rayleigh
from lmsc_hmm.src.hmm.baum_welch import fit, reestimate
from lmsc_hmm.src.hmm.forward_backward import (backward, decode, e_step,
                                               forward)
from lmsc_hmm.src.hmm.logmath import max_star, max_star_fold, max_star_reduce
from lmsc_hmm.src.hmm.model import HmmModel, initial_model
from lmsc_hmm.src.hmm.oracle import linear_forward_backward_oracle
from lmsc_hmm.src.markov.chain import (MarkovChain, simulate,
                                       stationary_distribution)
from lmsc_hmm.src.baselines.threshold import labeling_error_share

from conftest import (enumerate_posteriors, enumerate_reestimate,
                      random_model, random_observations)


def test_max_star_values():
    assert max_star(0.0, 0.0) == pytest.approx(math.log(2.0), abs=1e-15)
    assert max_star(1.0, 2.0) == pytest.approx(2.313262, abs=1e-6)
    assert max_star(-math.inf, 3.5) == 3.5
    assert max_star(3.5, -math.inf) == 3.5
    assert max_star(-math.inf, -math.inf) == -math.inf
    assert max_star(0.0, -100.0) == 0.0


def test_max_star_fold_matches_reduce():
    values = [-3.0, 0.5, -math.inf, 2.0]
    expected = math.log(sum(math.exp(v) for v in values))
    assert max_star_fold(values) == pytest.approx(expected, abs=1e-12)
    assert max_star_reduce(np.array(values)) == pytest.approx(expected, abs=1e-12)
    assert max_star_fold([]) == -math.inf


def test_max_star_reduce_over_several_axes():
    table = np.log(np.arange(1.0, 25.0).reshape(2, 3, 4))
    folded = max_star_reduce(table, axis=(1, 2))
    np.testing.assert_allclose(np.exp(folded), np.exp(table).sum(axis=(1, 2)), rtol=1e-12)
    assert max_star_reduce(table, axis=(1, 2), keepdims=True).shape == (2, 1, 1)


def test_likelihood_matches_enumeration(benchmark_model):
    obs = random_observations(np.random.default_rng(6), 6)
    likelihood, _, _ = enumerate_posteriors(benchmark_model, obs)
    _, log_likelihood = forward(benchmark_model, obs)
    assert log_likelihood == pytest.approx(math.log(likelihood), abs=1e-10)


def test_single_observation(benchmark_model):
    obs = ObservationSequence(amplitudes=[0.7])
    alpha, log_likelihood = forward(benchmark_model, obs)
    expected = math.log(sum(p * f.pdf(0.7) for p, f in zip([1 / 3, 2 / 3], benchmark_model.emissions)))
    assert log_likelihood == pytest.approx(expected, abs=1e-12)
    np.testing.assert_array_equal(backward(benchmark_model, obs), [[0.0, 0.0]])
    tables = e_step(benchmark_model, obs)
    assert tables.zeta.shape == (0, 2, 2)
    assert np.exp(tables.gamma).sum() == pytest.approx(1.0, abs=1e-12)


def test_single_state_model(rng):
    f = Gaussian(mu=1.0, sigma=0.3)
    model = HmmModel(chain=MarkovChain([[1.0]], [1.0]), emissions=(f,))
    obs = random_observations(rng, 20)
    tables = e_step(model, obs)
    np.testing.assert_array_equal(tables.gamma, np.zeros((20, 1)))
    assert tables.log_likelihood == pytest.approx(float(np.sum(f.log_pdf(obs.amplitudes))), abs=1e-9)


@pytest.mark.parametrize("seed", range(40))
def test_posteriors_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    n = int(rng.integers(2, 9))
    model = random_model(rng, m, with_zeros=seed % 3 == 0)
    obs = random_observations(rng, n)

    likelihood, gamma, zeta = enumerate_posteriors(model, obs)
    tables = e_step(model, obs)

    assert tables.log_likelihood == pytest.approx(math.log(likelihood), abs=1e-10)
    np.testing.assert_allclose(np.exp(tables.gamma), gamma, atol=1e-10)
    np.testing.assert_allclose(np.exp(tables.zeta), zeta, atol=1e-10)

    p_matrix, initial = enumerate_reestimate(model, obs)
    new_model, _, _ = reestimate(model, obs)
    np.testing.assert_allclose(new_model.chain.transition_matrix, p_matrix, atol=1e-9)
    np.testing.assert_allclose(new_model.chain.initial_probabilities, initial, atol=1e-9)


def test_eight_step_two_state_posteriors(benchmark_model):
    obs = random_observations(np.random.default_rng(8), 8)
    _, gamma, _ = enumerate_posteriors(benchmark_model, obs)
    np.testing.assert_allclose(np.exp(e_step(benchmark_model, obs).gamma), gamma, atol=1e-10)


@pytest.mark.parametrize("seed", range(20))
def test_log_domain_matches_linear_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    model = random_model(rng, int(rng.integers(1, 4)))
    obs = random_observations(rng, int(rng.integers(2, 51)))

    tables = e_step(model, obs)
    oracle = linear_forward_backward_oracle(model, obs)

    np.testing.assert_allclose(np.exp(tables.gamma), np.exp(oracle.gamma), atol=1e-8)
    np.testing.assert_allclose(np.exp(tables.zeta), np.exp(oracle.zeta), atol=1e-8)
    assert tables.log_likelihood == pytest.approx(oracle.log_likelihood, abs=1e-8)


def test_oracle_refuses_long_sequences(benchmark_model):
    with pytest.raises(OracleRangeError):
        linear_forward_backward_oracle(benchmark_model, ObservationSequence(amplitudes=np.full(10_001, 0.7)))


def test_normalization_and_likelihood_invariance(rng):
    model = random_model(rng, 3)
    obs = random_observations(rng, 200)
    tables = e_step(model, obs)

    np.testing.assert_allclose(np.exp(tables.gamma).sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(np.exp(tables.zeta).sum(axis=(1, 2)), 1.0, atol=1e-9)
    np.testing.assert_allclose(np.exp(tables.zeta).sum(axis=2), np.exp(tables.gamma[:-1]), atol=1e-9)

    per_step = max_star_reduce(tables.alpha + tables.beta, axis=1)
    np.testing.assert_allclose(per_step, tables.log_likelihood, atol=1e-9)


def test_long_sequence_stays_finite(benchmark_model):
    _, obs = simulate(benchmark_model.chain, benchmark_model.emissions, 20_000, np.random.default_rng(4))
    tables = e_step(benchmark_model, obs)
    assert np.isfinite(tables.log_likelihood)
    assert np.all(np.isfinite(tables.gamma))


def test_structural_zeros_are_preserved(rng):
    model = initial_model(
        (Gaussian(mu=0.2, sigma=0.3), Gaussian(mu=0.8, sigma=0.3), Gaussian(mu=1.4, sigma=0.3)),
        transition_matrix=[[0.8, 0.2, 0.0], [0.1, 0.8, 0.1], [0.05, 0.15, 0.8]],
    )
    obs = random_observations(rng, 300)
    tables = e_step(model, obs)
    assert np.all(np.isneginf(tables.zeta[:, 0, 2]))

    report = fit(model, obs, max_iters=10)
    assert report.model.chain.transition_matrix[0, 2] == 0.0


def test_decode_breaks_ties_towards_lowest_state():
    gamma = np.log([[0.5, 0.5], [0.2, 0.8], [0.6, 0.4]])
    np.testing.assert_array_equal(decode(gamma).one_based(), [1, 2, 1])


def test_zero_likelihood_reports_the_sample():
    model = HmmModel(chain=MarkovChain([[1.0]], [1.0]), emissions=(Rayleigh(sigma=1.0),))
    obs = ObservationSequence(amplitudes=[0.5, 1.0, -0.2, 0.3])
    with pytest.raises(ZeroLikelihoodError) as e:
        e_step(model, obs)
    assert e.value.t == 3


def test_reestimate_needs_two_samples(benchmark_model):
    with pytest.raises(InvalidInputError):
        reestimate(benchmark_model, ObservationSequence(amplitudes=[0.7]))


def test_reestimate_keeps_emissions_and_normalizes(benchmark_model, rng):
    obs = random_observations(rng, 100)
    new_model, _, _ = reestimate(benchmark_model, obs)
    assert new_model.emissions == benchmark_model.emissions
    np.testing.assert_allclose(new_model.chain.transition_matrix.sum(axis=1), 1.0, atol=1e-9)
    assert new_model.chain.initial_probabilities.sum() == pytest.approx(1.0, abs=1e-9)


def test_fit_is_monotone(benchmark_model):
    _, obs = simulate(benchmark_model.chain, benchmark_model.emissions, 2_000, np.random.default_rng(9))
    report = fit(initial_model(benchmark_model.emissions, stay=0.5), obs, max_iters=30)
    assert np.all(np.diff(report.log_likelihood_trace) >= -1e-9)
    assert report.iterations == len(report.log_likelihood_trace)


def test_initial_model_starts(benchmark_model):
    emissions = benchmark_model.emissions
    uniform = initial_model(emissions, stay=0.5)
    np.testing.assert_allclose(uniform.chain.transition_matrix, 0.5)

    weighted = initial_model(emissions, initial_probabilities=[1 / 3, 2 / 3], stay=0.92, start="weights")
    np.testing.assert_allclose(weighted.chain.transition_matrix, [[0.92 + 0.08 / 3, 0.16 / 3],
                                                                  [0.08 / 3, 0.92 + 0.16 / 3]])
    np.testing.assert_allclose(stationary_distribution(weighted.chain), [1 / 3, 2 / 3], atol=1e-12)

    with pytest.raises(InvalidInputError):
        initial_model(emissions, stay=0.9, start="weights")
    with pytest.raises(InvalidInputError):
        initial_model(emissions, stay=0.9, start="truth")


def test_fit_with_one_iteration_is_one_reestimate(benchmark_model, rng):
    obs = random_observations(rng, 60)
    model0 = initial_model(benchmark_model.emissions, stay=0.5)
    report = fit(model0, obs, max_iters=1)
    expected, log_likelihood, _ = reestimate(model0, obs)
    np.testing.assert_array_equal(report.model.chain.transition_matrix, expected.chain.transition_matrix)
    assert report.log_likelihood_trace == [log_likelihood]
    assert not report.converged


def test_fit_validates_arguments(benchmark_model, rng):
    obs = random_observations(rng, 10)
    with pytest.raises(InvalidInputError):
        fit(benchmark_model, obs, max_iters=0)
    with pytest.raises(InvalidInputError):
        fit(benchmark_model, obs, tol=0.0)


def test_model_json_round_trip(benchmark_model):
    restored = HmmModel.from_dict(benchmark_model.to_dict())
    assert restored.emissions == benchmark_model.emissions
    np.testing.assert_array_equal(restored.chain.transition_matrix, benchmark_model.chain.transition_matrix)


def _benchmark_fit(mu1: float, seed: int):
    emissions = (Gaussian(mu=mu1, sigma=0.2), Gaussian(mu=1.0, sigma=0.2))
    chain = MarkovChain([[0.95, 0.05], [0.025, 0.975]], [1 / 3, 2 / 3])
    path, obs = simulate(chain, emissions, 100_000, np.random.default_rng(seed))
    report = fit(initial_model(emissions, stay=0.5), obs, max_iters=100, tol=1e-6)
    return path, obs, report


@pytest.mark.slow
@pytest.mark.parametrize("seed", [2009, 2010, 2011])
def test_recovers_benchmark_chain_at_wide_separation(seed):
    path, obs, report = _benchmark_fit(0.4, seed)
    p_hat = report.model.chain.transition_matrix
    assert p_hat[0, 1] == pytest.approx(0.050, abs=0.005)
    assert p_hat[1, 0] == pytest.approx(0.025, abs=0.003)
    assert np.all(np.diff(report.log_likelihood_trace) >= -1e-9)

    decoded = decode(e_step(report.model, obs, with_zeta=False).gamma)
    assert labeling_error_share(path, decoded) < 0.02


@pytest.mark.slow
def test_stationary_estimate_at_narrow_separation():
    _, _, report = _benchmark_fit(0.9, 2010)
    assert stationary_distribution(report.model.chain)[0] == pytest.approx(0.33, abs=0.01)
    assert np.isfinite(report.log_likelihood_trace[-1])


@pytest.mark.slow
def test_benchmark_length_sequence_stays_finite(benchmark_model):
    _, obs = simulate(benchmark_model.chain, benchmark_model.emissions, 100_000, np.random.default_rng(5))
    tables = e_step(benchmark_model, obs)
    assert np.isfinite(tables.log_likelihood)
    assert np.all(np.isfinite(tables.alpha))
    assert np.all(np.isfinite(tables.beta))
    assert np.all(np.isfinite(tables.zeta))
