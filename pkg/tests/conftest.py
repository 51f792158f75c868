import itertools
import math

import numpy as np
import pytest

from lmsc_hmm.src.common.sequences import ObservationSequence
from lmsc_hmm.src.distributions.families import Gaussian
from lmsc_hmm.src.hmm.model import HmmModel
from lmsc_hmm.src.markov.chain import MarkovChain

BENCHMARK_MATRIX = [[0.95, 0.05], [0.025, 0.975]]
BENCHMARK_STATIONARY = [1.0 / 3.0, 2.0 / 3.0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def benchmark_chain():
    return MarkovChain(BENCHMARK_MATRIX, BENCHMARK_STATIONARY)


@pytest.fixture
def benchmark_model(benchmark_chain):
    return HmmModel(chain=benchmark_chain, emissions=(Gaussian(mu=0.4, sigma=0.2), Gaussian(mu=1.0, sigma=0.2)))


def random_model(rng: np.random.Generator, m: int, with_zeros: bool = False) -> HmmModel:
    """
    Random m-state model with Gaussian emissions spread over [0, 2].
    """
    p_matrix = rng.dirichlet(np.ones(m), size=m)
    if with_zeros and m > 1:
        p_matrix[0, m - 1] = 0.0
        p_matrix[0] /= p_matrix[0].sum()
    initial = rng.dirichlet(np.ones(m))
    emissions = tuple(
        Gaussian(mu=float(rng.uniform(0.0, 2.0)), sigma=float(rng.uniform(0.2, 0.6))) for _ in range(m)
    )
    return HmmModel(chain=MarkovChain(p_matrix, initial), emissions=emissions)


def random_observations(rng: np.random.Generator, n: int) -> ObservationSequence:
    return ObservationSequence(amplitudes=rng.uniform(0.0, 2.0, size=n))


def enumerate_posteriors(model: HmmModel, obs: ObservationSequence):
    """
    Exact posteriors by summing over all m**n state paths.

    Returns:
        tuple: (likelihood, gamma[n, m], zeta[n-1, m, m]) in the linear domain.
    """
    n, m = len(obs), model.m
    p_matrix = model.chain.transition_matrix
    initial = model.chain.initial_probabilities
    f = np.column_stack([np.asarray(d.pdf(obs.amplitudes)) for d in model.emissions])

    likelihood = 0.0
    gamma = np.zeros((n, m))
    zeta = np.zeros((max(n - 1, 0), m, m))
    for path in itertools.product(range(m), repeat=n):
        weight = initial[path[0]] * f[0, path[0]]
        for t in range(1, n):
            weight *= p_matrix[path[t - 1], path[t]] * f[t, path[t]]
        likelihood += weight
        for t in range(n):
            gamma[t, path[t]] += weight
        for t in range(n - 1):
            zeta[t, path[t], path[t + 1]] += weight

    return likelihood, gamma / likelihood, zeta / likelihood


def enumerate_reestimate(model: HmmModel, obs: ObservationSequence):
    """
    One Baum-Welch step from enumerated transition posteriors.
    """
    _, _, zeta = enumerate_posteriors(model, obs)
    numerator = zeta.sum(axis=0)
    p_matrix = numerator / numerator.sum(axis=1, keepdims=True)
    initial = zeta[0].sum(axis=1)
    return p_matrix, initial


def gaussian_q(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))
