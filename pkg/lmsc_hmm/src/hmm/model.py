from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lmsc_hmm.src.common.exceptions import InvalidInputError
from lmsc_hmm.src.common.sequences import ObservationSequence
from lmsc_hmm.src.distributions.families import (EmissionDistribution,
                                                 distribution_from_dict)
from lmsc_hmm.src.markov.chain import MarkovChain

# Off-diagonal mass of the default starting chain: even, or following the state probabilities.
BW_STARTS = ("uniform", "weights")


@dataclass(frozen=True, eq=False)
class HmmModel:
    """
    A Markov chain paired with one fixed emission density per state.

    Attributes:
        chain (MarkovChain): Transition and state probabilities, re-estimated by Baum-Welch.
        emissions (Tuple[EmissionDistribution, ...]): Per-state densities, held fixed.
    """
    chain: MarkovChain
    emissions: Tuple[EmissionDistribution, ...]

    def __post_init__(self):
        emissions = tuple(self.emissions)
        if len(emissions) != self.chain.m:
            raise InvalidInputError(f"Got {len(emissions)} emission densities for a {self.chain.m}-state chain.")
        object.__setattr__(self, "emissions", emissions)

    @property
    def m(self) -> int:
        return self.chain.m

    def log_emissions(self, obs: ObservationSequence) -> np.ndarray:
        """
        Tabulates phi_i(r_t) = ln f_i(r_t) as an n x m array.
        """
        r = obs.amplitudes
        return np.column_stack([np.asarray(f.log_pdf(r), dtype=float) for f in self.emissions])

    def with_chain(self, chain: MarkovChain) -> "HmmModel":
        return HmmModel(chain=chain, emissions=self.emissions)

    def to_dict(self) -> Dict[str, Any]:
        return {**self.chain.to_dict(), "emissions": [f.to_dict() for f in self.emissions]}

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> "HmmModel":
        try:
            emissions = [distribution_from_dict(item) for item in spec["emissions"]]
        except KeyError as e:
            raise InvalidInputError(f"Model spec is missing {e}.") from e
        return cls(chain=MarkovChain.from_dict(spec), emissions=tuple(emissions))


@dataclass(frozen=True, eq=False)
class PosteriorTables:
    """
    E-step output, all in the log domain.

    Attributes:
        alpha (np.ndarray): n x m forward metrics.
        beta (np.ndarray): n x m backward metrics.
        gamma (np.ndarray): n x m state posteriors ln Pr{X_t = i | r}.
        log_likelihood (float): ln f(r).
        zeta (Optional[np.ndarray]): (n-1) x m x m transition posteriors, when computed.
    """
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    log_likelihood: float
    zeta: Optional[np.ndarray] = None


@dataclass(eq=False)
class FitReport:
    """
    Outcome of an iterated Baum-Welch run.

    Attributes:
        model (HmmModel): Model after the last re-estimation.
        log_likelihood_trace (List[float]): ln f(r) under the model entering each iteration.
        iterations (int): Re-estimation steps performed.
        converged (bool): Whether the stopping tolerance was met before `max_iters`.
        max_iters (int): Iteration cap used.
        tol (float): Absolute log-likelihood tolerance used.
    """
    model: HmmModel
    log_likelihood_trace: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    max_iters: int = 100
    tol: float = 1e-6

    def to_dict(self, config_hash: Optional[str] = None) -> Dict[str, Any]:
        report = {
            "transition_matrix": self.model.chain.transition_matrix.tolist(),
            "initial_probabilities": self.model.chain.initial_probabilities.tolist(),
            "emissions": [f.to_dict() for f in self.model.emissions],
            "log_likelihood_trace": list(self.log_likelihood_trace),
            "iterations": self.iterations,
            "converged": self.converged,
            "max_iters": self.max_iters,
            "tol": self.tol,
        }
        if config_hash is not None:
            report["config_hash"] = config_hash
        return report


def validate_same_shape(*tables: np.ndarray) -> None:
    shapes = {table.shape for table in tables}
    if len(shapes) != 1:
        raise InvalidInputError(f"Tables must share one shape, got {sorted(shapes)}.")


def initial_model(
        emissions: Sequence[EmissionDistribution],
        transition_matrix: Optional[Sequence[Sequence[float]]] = None,
        initial_probabilities: Optional[Sequence[float]] = None,
        stay: float = 0.5,
        start: str = "uniform",
) -> HmmModel:
    """
    Builds a Baum-Welch starting point.

    Without an explicit matrix, `start="uniform"` stays with probability `stay`
    and spreads the rest evenly over the other states. `start="weights"` keeps
    the state with probability `stay` and otherwise redraws it from
    `initial_probabilities`, so the start is stationary at them.

    Raises:
        InvalidInputError: On an unknown `start`, or `start="weights"` without probabilities.
    """
    if start not in BW_STARTS:
        raise InvalidInputError(f"Unknown Baum-Welch start {start!r}, expected one of {list(BW_STARTS)}.")
    m = len(emissions)
    if transition_matrix is not None:
        initial = np.full(m, 1.0 / m) if initial_probabilities is None else initial_probabilities
        chain = MarkovChain(transition_matrix, initial)
    elif start == "weights":
        if initial_probabilities is None:
            raise InvalidInputError("A weights start needs initial_probabilities.")
        chain = MarkovChain.resampling(initial_probabilities, stay)
    else:
        chain = MarkovChain.uniform_off_diagonal(m, stay=stay, initial=initial_probabilities)
    return HmmModel(chain=chain, emissions=tuple(emissions))
