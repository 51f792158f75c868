"""
Synthetic measurement traces with correlated fast fading.

Hidden states follow a Markov chain sampled every `sample_spacing` meters.
Within a state the amplitude keeps that state's marginal density exactly,
but consecutive samples are correlated through a Gaussian copula: a latent
AR(1) process z_t with lag-1 correlation rho is mapped to u_t = Phi(z_t) and
then through the inverse CDF of the current state's density.
"""
import logging
import math
from typing import Sequence

import numpy as np
from scipy import signal, stats

from lmsc_hmm.src.common.exceptions import InvalidInputError
from lmsc_hmm.src.distributions.families import (EmissionDistribution,
                                                 Lognormal, Rayleigh, Rice)
from lmsc_hmm.src.markov.chain import MarkovChain, simulate
from lmsc_hmm.src.preprocess.trace import MeasurementTrace

log = logging.getLogger(__name__)

# Keeps Phi(z) away from 0 and 1 so every inverse CDF stays finite.
QUANTILE_CLIP = 1e-12


def correlated_uniforms(n: int, correlation: float, rng: np.random.Generator) -> np.ndarray:
    """
    Uniform marginals driven by a stationary unit-variance AR(1) latent process.
    """
    if not -1 < correlation < 1:
        raise InvalidInputError(f"Correlation must lie in (-1, 1), got {correlation}.")

    innovations = rng.standard_normal(n)
    innovations[1:] *= math.sqrt(1.0 - correlation ** 2)
    latent = signal.lfilter([1.0], [1.0, -correlation], innovations)
    return np.clip(stats.norm.cdf(latent), QUANTILE_CLIP, 1.0 - QUANTILE_CLIP)


def synthetic_trace(
        chain: MarkovChain,
        emissions: Sequence[EmissionDistribution],
        n: int,
        rng: np.random.Generator,
        sample_spacing: float = 0.25,
        correlation: float = 0.9,
        trace_id: str = "synthetic",
) -> MeasurementTrace:
    """
    Generates a trace of `n` records spaced `sample_spacing` meters apart.

    Args:
        chain (MarkovChain): State chain per record.
        emissions (Sequence[EmissionDistribution]): Marginal density of each state.
        n (int): Number of records.
        rng (np.random.Generator): Seeded random source.
        sample_spacing (float): Track distance between records in meters.
        correlation (float): Lag-1 correlation of the latent fading process.
        trace_id (str): Name given to the trace.

    Returns:
        MeasurementTrace: The trace; the true 1-based states are kept in
            `metadata["states"]`.
    """
    if not sample_spacing > 0:
        raise InvalidInputError(f"sample_spacing must be positive, got {sample_spacing}.")

    path, _ = simulate(chain, emissions, n, rng)
    uniforms = correlated_uniforms(n, correlation, rng)

    amplitudes = np.empty(n)
    for k, emission in enumerate(emissions):
        visits = path.states == k
        if visits.any():
            amplitudes[visits] = emission.ppf(uniforms[visits])

    log.info(f"Generated synthetic trace '{trace_id}': {n} records, {n * sample_spacing:.0f} m, rho={correlation}.")

    return MeasurementTrace(
        positions=np.arange(n) * sample_spacing,
        amplitudes=amplitudes,
        trace_id=trace_id,
        metadata={"states": path.one_based(), "sample_spacing_m": sample_spacing, "correlation": correlation},
    )


def slowed_chain(chain: MarkovChain, factor: int) -> MarkovChain:
    """
    Chain that changes state `factor` times more slowly, I + (P - I) / factor.

    Its stationary distribution equals that of `chain`; sampling every
    `factor`-th record approximately recovers `chain`.
    """
    if factor < 1:
        raise InvalidInputError(f"factor must be at least 1, got {factor}.")
    m = chain.m
    p_matrix = np.eye(m) + (chain.transition_matrix - np.eye(m)) / factor
    return MarkovChain(p_matrix, chain.initial_probabilities)


def default_three_state_model() -> tuple:
    """
    Line-of-sight / shadowing / blockage stand-in for measured urban data.

    Returns:
        tuple: (MarkovChain at 1 m resolution, [Rice, Lognormal, Rayleigh]).
    """
    chain = MarkovChain(
        [[0.92, 0.07, 0.01],
         [0.08, 0.88, 0.04],
         [0.02, 0.10, 0.88]],
        [0.45, 0.35, 0.20],
    )
    emissions = [Rice(nu=1.0, sigma=0.15), Lognormal(mu_log=math.log(0.45), sigma_log=0.3), Rayleigh(sigma=0.1)]
    return chain, emissions
