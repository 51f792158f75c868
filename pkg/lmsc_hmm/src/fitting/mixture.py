from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from lmsc_hmm.src.common.exceptions import InvalidInputError
from lmsc_hmm.src.distributions.families import (Amplitude,
                                                 EmissionDistribution,
                                                 distribution_from_dict)
from lmsc_hmm.src.distributions.separability import (mixture_pdf,
                                                      validate_weights)


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """
    Weighted sum of fixed-family densities; each component is one channel state.
    """
    weights: np.ndarray
    components: Tuple[EmissionDistribution, ...]

    def __post_init__(self):
        components = tuple(self.components)
        weights = validate_weights(self.weights, len(components)).copy()
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)

    @property
    def families(self) -> Tuple[str, ...]:
        return tuple(c.family for c in self.components)

    def pdf(self, r: Amplitude) -> Amplitude:
        return mixture_pdf(self.weights, self.components, r)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "components": [
                {**component.to_dict(), "weight": float(weight)}
                for weight, component in zip(self.weights, self.components)
            ]
        }

    @classmethod
    def from_dict(cls, spec: Dict[str, Any]) -> "MixtureModel":
        try:
            items = spec["components"]
            weights = [float(item["weight"]) for item in items]
        except KeyError as e:
            raise InvalidInputError(f"Mixture spec is missing {e}.") from e
        return cls(weights=np.asarray(weights), components=tuple(distribution_from_dict(i) for i in items))


def state_probabilities(mix: MixtureModel) -> np.ndarray:
    """
    Reads the mixture weights as Markov state probabilities p_i.
    """
    return np.array(mix.weights, dtype=float)


def normalized(weights: Sequence[float]) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    return weights / weights.sum()
