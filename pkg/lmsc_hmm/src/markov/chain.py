import bisect
import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from lmsc_hmm.src.common.exceptions import (AmbiguousStationaryError,
                                            InfiniteDurationError,
                                            InvalidInputError)
from lmsc_hmm.src.common.sequences import ObservationSequence, StatePath
from lmsc_hmm.src.distributions.families import EmissionDistribution

log = logging.getLogger(__name__)

STOCHASTIC_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """
    A finite-state Markov chain.

    Attributes:
        transition_matrix (np.ndarray): Row-stochastic m x m matrix of p_ij.
        initial_probabilities (np.ndarray): State probabilities p_i used for the first sample.
    """
    transition_matrix: np.ndarray
    initial_probabilities: np.ndarray

    def __post_init__(self):
        p_matrix = np.array(self.transition_matrix, dtype=float)
        p_init = np.array(self.initial_probabilities, dtype=float).ravel()

        if p_matrix.ndim != 2 or p_matrix.shape[0] != p_matrix.shape[1] or p_matrix.shape[0] < 1:
            raise InvalidInputError(f"Transition matrix must be square and non-empty, got shape {p_matrix.shape}.")
        if p_init.size != p_matrix.shape[0]:
            raise InvalidInputError(
                f"Got {p_init.size} state probabilities for a {p_matrix.shape[0]}-state chain."
            )
        if np.any(p_matrix < 0) or np.any(p_matrix > 1) or not np.all(np.isfinite(p_matrix)):
            raise InvalidInputError("Transition probabilities must lie in [0, 1].")
        row_sums = p_matrix.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > STOCHASTIC_TOLERANCE):
            raise InvalidInputError(f"Transition matrix rows must sum to 1, got {row_sums.tolist()}.")
        if np.any(p_init < 0) or abs(p_init.sum() - 1.0) > STOCHASTIC_TOLERANCE:
            raise InvalidInputError(f"State probabilities must form a distribution, got {p_init.tolist()}.")

        p_matrix.setflags(write=False)
        p_init.setflags(write=False)
        object.__setattr__(self, "transition_matrix", p_matrix)
        object.__setattr__(self, "initial_probabilities", p_init)

    @property
    def m(self) -> int:
        return self.transition_matrix.shape[0]

    @property
    def log_transition_matrix(self) -> np.ndarray:
        # structural zeros become -inf
        with np.errstate(divide="ignore"):
            return np.log(self.transition_matrix)

    @property
    def log_initial_probabilities(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.initial_probabilities)

    @classmethod
    def uniform_off_diagonal(
            cls, m: int, stay: float = 0.5, initial: Sequence[float] = None
    ) -> "MarkovChain":
        """
        Builds a chain that stays with probability `stay` and spreads the rest evenly.

        With m = 2 and the default `stay` this is the all-0.5 matrix.
        """
        if m == 1:
            return cls(np.ones((1, 1)), np.ones(1))
        p_matrix = np.full((m, m), (1.0 - stay) / (m - 1))
        np.fill_diagonal(p_matrix, stay)
        initial = np.full(m, 1.0 / m) if initial is None else initial
        return cls(p_matrix, initial)

    @classmethod
    def resampling(cls, weights: Sequence[float], stay: float) -> "MarkovChain":
        """
        Builds a chain that keeps its state with probability `stay` and otherwise redraws it from `weights`.

        p_ij = (1 - stay) * w_j for j != i, so the stationary distribution and
        the initial probabilities are both `weights`.
        """
        weights = np.asarray(weights, dtype=float)
        p_matrix = (1.0 - stay) * np.tile(weights, (weights.size, 1))
        p_matrix[np.diag_indices(weights.size)] += stay
        return cls(p_matrix, weights)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "transition_matrix": self.transition_matrix.tolist(),
            "initial_probabilities": self.initial_probabilities.tolist(),
        }

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> "MarkovChain":
        try:
            return cls(spec["transition_matrix"], spec["initial_probabilities"])
        except KeyError as e:
            raise InvalidInputError(f"Markov chain spec is missing {e}.") from e


def stationary_distribution(chain: MarkovChain) -> np.ndarray:
    """
    Solves pi P = pi with sum(pi) = 1.

    The system (P^T - I) pi = 0 is stacked with a row of ones and solved by
    least squares, which is exact for the small chains used here.

    Raises:
        AmbiguousStationaryError: If the chain has more than one stationary vector.
    """
    m = chain.m
    system = chain.transition_matrix.T - np.eye(m)

    if np.linalg.matrix_rank(system) < m - 1:
        raise AmbiguousStationaryError(
            f"Chain has {m - np.linalg.matrix_rank(system)} closed classes, the stationary distribution is not unique."
        )

    lhs = np.vstack([system, np.ones((1, m))])
    rhs = np.zeros(m + 1)
    rhs[-1] = 1.0
    pi, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)

    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def mean_state_durations(chain: MarkovChain) -> np.ndarray:
    """
    Computes the mean dwell time D_i = 1 / (1 - p_ii) in samples per visit.

    Raises:
        InfiniteDurationError: If some state is absorbing.
    """
    stay = np.diag(chain.transition_matrix)
    absorbing = np.flatnonzero(stay >= 1.0)
    if absorbing.size:
        raise InfiniteDurationError(f"States {(absorbing + 1).tolist()} never leave, durations are infinite.")
    return 1.0 / (1.0 - stay)


def simulate(
        chain: MarkovChain,
        emissions: Sequence[EmissionDistribution],
        n: int,
        rng: np.random.Generator,
) -> Tuple[StatePath, ObservationSequence]:
    """
    Draws a hidden state path and the amplitudes emitted along it.

    x_1 follows the state probabilities, x_{t+1} follows row x_t of the
    transition matrix and r_t is drawn from the emission density of x_t.

    Args:
        chain (MarkovChain): The hidden chain.
        emissions (Sequence[EmissionDistribution]): One density per state.
        n (int): Sequence length, at least 1.
        rng (np.random.Generator): Seeded random source.

    Returns:
        Tuple[StatePath, ObservationSequence]: Ground-truth states and observations.

    Raises:
        InvalidInputError: On an emission count that differs from the state count, or n < 1.
    """
    if len(emissions) != chain.m:
        raise InvalidInputError(f"Got {len(emissions)} emission densities for a {chain.m}-state chain.")
    if n < 1:
        raise InvalidInputError(f"Sequence length must be at least 1, got {n}.")

    cumulative = np.cumsum(chain.transition_matrix, axis=1)
    cumulative[:, -1] = 1.0
    rows = [row.tolist() for row in cumulative]
    initial = np.cumsum(chain.initial_probabilities)
    initial[-1] = 1.0

    last = chain.m - 1
    draws = rng.random(n).tolist()
    states = np.empty(n, dtype=np.int64)
    state = min(bisect.bisect_right(initial.tolist(), draws[0]), last)
    states[0] = state
    for t in range(1, n):
        state = min(bisect.bisect_right(rows[state], draws[t]), last)
        states[t] = state

    amplitudes = np.empty(n)
    for k, emission in enumerate(emissions):
        visits = states == k
        count = int(visits.sum())
        if count:
            amplitudes[visits] = emission.sample(rng, size=count)

    log.debug(f"Simulated {n} samples over {chain.m} states.")

    return StatePath(states=states, n_states=chain.m), ObservationSequence(amplitudes=amplitudes)


def count_transitions(path: StatePath) -> np.ndarray:
    """
    Counts i -> j transitions along a path into an m x m matrix.
    """
    m = path.n_states
    states = path.states
    counts = np.zeros((m, m), dtype=np.int64)
    np.add.at(counts, (states[:-1], states[1:]), 1)
    return counts


def run_lengths(path: StatePath) -> Tuple[np.ndarray, np.ndarray]:
    """
    Splits a path into maximal runs of one state.

    Returns:
        Tuple[np.ndarray, np.ndarray]: The state of each run and its length.
    """
    states = path.states
    if states.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, states[1:] != states[:-1]])
    lengths = np.diff(np.r_[starts, states.size])
    return states[starts], lengths


def mean_run_lengths(path: StatePath) -> np.ndarray:
    """
    Empirical mean run length per state; NaN for states never visited.
    """
    run_states, lengths = run_lengths(path)
    means = np.full(path.n_states, np.nan)
    for k in range(path.n_states):
        mine = lengths[run_states == k]
        if mine.size:
            means[k] = mine.mean()
    return means


def merge_short_runs(path: StatePath, min_length: int) -> StatePath:
    """
    Absorbs runs shorter than `min_length` samples into their neighbours.

    A short run takes the state of the preceding run; a short leading run
    takes the state of the first long enough run. Used to apply a minimum
    state duration before reporting durations.
    """
    if min_length <= 1 or len(path) == 0:
        return path

    run_states, lengths = run_lengths(path)
    long_enough = lengths >= min_length
    if not long_enough.any():
        log.warning(f"No run reaches {min_length} samples, path left unchanged.")
        return path

    merged = run_states.copy()
    current = run_states[np.argmax(long_enough)]
    for k in range(merged.size):
        if long_enough[k]:
            current = run_states[k]
        merged[k] = current

    return StatePath(states=np.repeat(merged, lengths), n_states=path.n_states)
