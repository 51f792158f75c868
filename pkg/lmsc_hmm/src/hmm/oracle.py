"""
Linear-domain forward-backward with per-step normalization.

Kept as a cross-check for the log-domain implementation; it is limited to
short sequences on purpose.
"""
import numpy as np

from lmsc_hmm.src.common.exceptions import OracleRangeError
from lmsc_hmm.src.common.sequences import ObservationSequence
from lmsc_hmm.src.hmm.model import HmmModel, PosteriorTables

MAX_ORACLE_LENGTH = 10_000


def linear_forward_backward_oracle(model: HmmModel, obs: ObservationSequence) -> PosteriorTables:
    """
    Computes posteriors with the scaled linear recursions.

        a_t(i) = f_i(r_t) sum_j a_{t-1}(j) p_ji,   a_1(i) = p_i f_i(r_1)
        b_t(i) = sum_j b_{t+1}(j) p_ij f_j(r_{t+1}),   b_n(i) = 1

    Each a_t is divided by its sum c_t and b_t by c_{t+1}; ln f(r) = sum_t ln c_t.
    The returned alpha/beta are the unscaled metrics in log form.

    Raises:
        OracleRangeError: If the sequence is longer than 10^4 or a scale factor underflows.
    """
    n = len(obs)
    if n > MAX_ORACLE_LENGTH:
        raise OracleRangeError(f"The linear oracle handles at most {MAX_ORACLE_LENGTH} samples, got {n}.")

    p_matrix = model.chain.transition_matrix
    f = np.column_stack([np.asarray(d.pdf(obs.amplitudes), dtype=float) for d in model.emissions])
    m = model.m

    a = np.empty((n, m))
    scale = np.empty(n)
    current = model.chain.initial_probabilities * f[0]
    for t in range(n):
        if t:
            current = f[t] * (a[t - 1] @ p_matrix)
        scale[t] = current.sum()
        if not scale[t] > 0 or not np.isfinite(scale[t]):
            raise OracleRangeError(f"Forward scale factor underflowed at t={t + 1}.")
        a[t] = current / scale[t]

    b = np.empty((n, m))
    b[-1] = 1.0
    for t in range(n - 2, -1, -1):
        b[t] = p_matrix @ (f[t + 1] * b[t + 1]) / scale[t + 1]

    g = a * b
    g /= g.sum(axis=1, keepdims=True)

    z = a[:-1, :, None] * p_matrix[None, :, :] * (f[1:] * b[1:])[:, None, :]
    if n > 1:
        z /= z.sum(axis=(1, 2), keepdims=True)

    log_scale = np.cumsum(np.log(scale))
    with np.errstate(divide="ignore"):
        alpha = np.log(a) + log_scale[:, None]
        beta = np.log(b) + (log_scale[-1] - log_scale)[:, None]
        gamma = np.log(g)
        zeta = np.log(z)

    return PosteriorTables(alpha=alpha, beta=beta, gamma=gamma, log_likelihood=float(log_scale[-1]), zeta=zeta)
