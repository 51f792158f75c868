"""
Log-domain forward-backward recursions.

With phi_i(r_t) = ln f_i(r_t), pi_ij = ln p_ij and pi_i = ln p_i:

    alpha_1(i) = pi_i + phi_i(r_1)
    alpha_t(i) = phi_i(r_t) + max*_j (alpha_{t-1}(j) + pi_ji)
    beta_n(i)  = 0
    beta_t(i)  = max*_j (beta_{t+1}(j) + pi_ij + phi_j(r_{t+1}))

Zero-probability transitions enter as pi_ij = -inf and stay structural zeros.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from lmsc_hmm.src.common.exceptions import ZeroLikelihoodError
from lmsc_hmm.src.common.sequences import ObservationSequence, StatePath
from lmsc_hmm.src.hmm.logmath import max_star_reduce
from lmsc_hmm.src.hmm.model import (HmmModel, PosteriorTables,
                                    validate_same_shape)

log = logging.getLogger(__name__)


def _checked_log_emissions(model: HmmModel, obs: ObservationSequence) -> np.ndarray:
    phi = model.log_emissions(obs)
    impossible = np.flatnonzero(np.all(np.isneginf(phi), axis=1))
    if impossible.size:
        t = int(impossible[0]) + 1
        raise ZeroLikelihoodError(
            f"Observation r_{t} = {obs.amplitudes[t - 1]:g} has zero density under every state.", t=t
        )
    return phi


def _forward(phi: np.ndarray, log_p: np.ndarray, log_init: np.ndarray) -> Tuple[np.ndarray, float]:
    n, m = phi.shape
    alpha = np.empty((n, m))
    alpha[0] = log_init + phi[0]
    for t in range(1, n):
        alpha[t] = phi[t] + np.logaddexp.reduce(alpha[t - 1][:, None] + log_p, axis=0)

    log_likelihood = float(max_star_reduce(alpha[-1]))
    if not np.isfinite(log_likelihood):
        raise ZeroLikelihoodError("The observation sequence has zero likelihood under the model.")
    return alpha, log_likelihood


def _backward(phi: np.ndarray, log_p: np.ndarray) -> np.ndarray:
    n, m = phi.shape
    beta = np.empty((n, m))
    beta[-1] = 0.0
    for t in range(n - 2, -1, -1):
        beta[t] = np.logaddexp.reduce(log_p + (phi[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def forward(model: HmmModel, obs: ObservationSequence) -> Tuple[np.ndarray, float]:
    """
    Runs the forward recursion.

    Args:
        model (HmmModel): Model to evaluate.
        obs (ObservationSequence): Amplitudes r_1..r_n.

    Returns:
        Tuple[np.ndarray, float]: The n x m alpha table and ln f(r) = max*_i alpha_n(i).

    Raises:
        ZeroLikelihoodError: If some sample has zero density under all states,
            or the sequence is impossible under the chain.
    """
    phi = _checked_log_emissions(model, obs)
    return _forward(phi, model.chain.log_transition_matrix, model.chain.log_initial_probabilities)


def backward(model: HmmModel, obs: ObservationSequence) -> np.ndarray:
    """
    Runs the backward recursion; beta_n(i) = 0 for every state.

    Raises:
        ZeroLikelihoodError: If some sample has zero density under all states.
    """
    phi = _checked_log_emissions(model, obs)
    return _backward(phi, model.chain.log_transition_matrix)


def posteriors(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """
    Normalizes alpha + beta per time step into log state posteriors gamma.
    """
    validate_same_shape(alpha, beta)
    joint = alpha + beta
    return joint - max_star_reduce(joint, axis=1, keepdims=True)


def transition_posteriors(
        alpha: np.ndarray, beta: np.ndarray, phi: np.ndarray, log_p: np.ndarray
) -> np.ndarray:
    """
    Computes zeta_t(i, j) = ln Pr{X_t = i, X_{t+1} = j | r} for t = 1..n-1.

    Returns:
        np.ndarray: (n-1) x m x m table normalized per time step.
    """
    validate_same_shape(alpha, beta, phi)
    joint = alpha[:-1, :, None] + log_p[None, :, :] + (phi[1:] + beta[1:])[:, None, :]
    if joint.shape[0] == 0:
        return joint
    return joint - max_star_reduce(joint, axis=(1, 2), keepdims=True)


def e_step(model: HmmModel, obs: ObservationSequence, with_zeta: bool = True) -> PosteriorTables:
    """
    Computes every posterior table for one model and sequence.
    """
    phi = _checked_log_emissions(model, obs)
    log_p = model.chain.log_transition_matrix

    alpha, log_likelihood = _forward(phi, log_p, model.chain.log_initial_probabilities)
    beta = _backward(phi, log_p)
    gamma = posteriors(alpha, beta)
    zeta: Optional[np.ndarray] = transition_posteriors(alpha, beta, phi, log_p) if with_zeta else None

    return PosteriorTables(alpha=alpha, beta=beta, gamma=gamma, log_likelihood=log_likelihood, zeta=zeta)


def decode(gamma: np.ndarray) -> StatePath:
    """
    Picks the most probable state at each time step; ties go to the lowest index.
    """
    gamma = np.asarray(gamma, dtype=float)
    return StatePath(states=np.argmax(gamma, axis=1), n_states=gamma.shape[1])
