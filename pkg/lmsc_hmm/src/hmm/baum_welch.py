import logging
from typing import Tuple

import numpy as np

from lmsc_hmm.src.common.exceptions import InvalidInputError
from lmsc_hmm.src.common.sequences import ObservationSequence
from lmsc_hmm.src.hmm.forward_backward import e_step
from lmsc_hmm.src.hmm.logmath import max_star_reduce
from lmsc_hmm.src.hmm.model import FitReport, HmmModel, PosteriorTables
from lmsc_hmm.src.markov.chain import MarkovChain

log = logging.getLogger(__name__)

MONOTONICITY_SLACK = 1e-9


def _renormalize(probabilities: np.ndarray, axis: int = -1) -> np.ndarray:
    return probabilities / probabilities.sum(axis=axis, keepdims=True)


def reestimate(model: HmmModel, obs: ObservationSequence) -> Tuple[HmmModel, float, PosteriorTables]:
    """
    Performs one Baum-Welch step: E-step, then re-estimation of p_ij and p_i.

    In the log domain the M-step reads

        pi_ij = max*_t zeta_t(i, j) - max*_t max*_j zeta_t(i, j)
        pi_i  = max*_j zeta_1(i, j)

    Emission densities are carried over unchanged. A state with no posterior
    mass over t < n keeps its previous transition row.

    Args:
        model (HmmModel): Current model.
        obs (ObservationSequence): Amplitudes, at least two samples.

    Returns:
        Tuple[HmmModel, float, PosteriorTables]: Re-estimated model, ln f(r) under
            the input model and the posterior tables it was computed from.

    Raises:
        InvalidInputError: If the sequence has fewer than two samples.
        ZeroLikelihoodError: If the sequence is impossible under the model.
    """
    if len(obs) < 2:
        raise InvalidInputError(f"Re-estimation needs at least 2 observations, got {len(obs)}.")

    tables = e_step(model, obs, with_zeta=True)
    zeta = tables.zeta

    numerator = max_star_reduce(zeta, axis=0)
    denominator = max_star_reduce(numerator, axis=1, keepdims=True)

    log_p = model.chain.log_transition_matrix.copy()
    visited = np.isfinite(denominator[:, 0])
    if not visited.all():
        log.warning(f"States {(np.flatnonzero(~visited) + 1).tolist()} carry no posterior mass, rows kept.")
    log_p[visited] = numerator[visited] - denominator[visited]

    log_init = max_star_reduce(zeta[0], axis=1)

    transition_matrix = _renormalize(np.exp(log_p))
    initial_probabilities = _renormalize(np.exp(log_init))

    new_model = model.with_chain(MarkovChain(transition_matrix, initial_probabilities))
    return new_model, tables.log_likelihood, tables


def fit(model0: HmmModel, obs: ObservationSequence, max_iters: int = 100, tol: float = 1e-6) -> FitReport:
    """
    Iterates `reestimate` until the log-likelihood gain falls below `tol`.

    Args:
        model0 (HmmModel): Starting model; its emissions stay fixed throughout.
        obs (ObservationSequence): Amplitudes, at least two samples.
        max_iters (int): Maximum number of re-estimation steps.
        tol (float): Absolute log-likelihood improvement that counts as converged.

    Returns:
        FitReport: The final model with its log-likelihood trace.

    Raises:
        InvalidInputError: If `max_iters` < 1 or `tol` <= 0.
        ZeroLikelihoodError: Propagated from the E-step.
    """
    if max_iters < 1:
        raise InvalidInputError(f"max_iters must be at least 1, got {max_iters}.")
    if not tol > 0:
        raise InvalidInputError(f"tol must be positive, got {tol}.")

    report = FitReport(model=model0, max_iters=max_iters, tol=tol)
    model = model0

    for iteration in range(1, max_iters + 1):
        model, log_likelihood, _ = reestimate(model, obs)
        trace = report.log_likelihood_trace
        trace.append(log_likelihood)
        report.iterations = iteration
        report.model = model

        log.debug(f"Baum-Welch iteration {iteration}: ln f(r) = {log_likelihood:.9f}")

        if len(trace) >= 2:
            delta = trace[-1] - trace[-2]
            if delta < -MONOTONICITY_SLACK:
                log.warning(f"Log-likelihood decreased by {-delta:.3e} at iteration {iteration}.")
            if abs(delta) < tol:
                report.converged = True
                break

    log.info(
        f"Baum-Welch finished after {report.iterations} iterations "
        f"(converged={report.converged}, ln f(r)={report.log_likelihood_trace[-1]:.6f})."
    )

    return report
