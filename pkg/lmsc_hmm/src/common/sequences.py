from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from lmsc_hmm.src.common.exceptions import InvalidInputError


@dataclass(frozen=True, eq=False)
class ObservationSequence:
    """
    Amplitude samples r_1..r_n, optionally stamped with track positions.

    Attributes:
        amplitudes (np.ndarray): Linear signal envelope samples, all finite.
        positions (Optional[np.ndarray]): Track distance of each sample in meters.
        source (Dict[str, Any]): Free-form provenance (spacing used, trace id, filter span).
    """
    amplitudes: np.ndarray
    positions: Optional[np.ndarray] = None
    source: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=float).ravel()
        if amplitudes.size == 0:
            raise InvalidInputError("An observation sequence needs at least one sample.")
        if not np.all(np.isfinite(amplitudes)):
            bad = int(np.flatnonzero(~np.isfinite(amplitudes))[0])
            raise InvalidInputError(f"Observation {bad + 1} is not finite.")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

        if self.positions is not None:
            positions = np.array(self.positions, dtype=float).ravel()
            if positions.shape != amplitudes.shape:
                raise InvalidInputError(
                    f"Got {positions.size} positions for {amplitudes.size} amplitudes."
                )
            positions.setflags(write=False)
            object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return self.amplitudes.size

    def with_amplitudes(self, amplitudes: np.ndarray, **source) -> "ObservationSequence":
        return ObservationSequence(
            amplitudes=amplitudes, positions=self.positions, source={**self.source, **source}
        )


@dataclass(frozen=True, eq=False)
class StatePath:
    """
    A sequence of hidden state indices.

    States are stored 0-based; `one_based()` gives the 1..m labels used in
    every file and report.
    """
    states: np.ndarray
    n_states: int

    def __post_init__(self):
        states = np.array(self.states, dtype=np.int64).ravel()
        if self.n_states < 1:
            raise InvalidInputError(f"A state path needs at least one state, got {self.n_states}.")
        if states.size and (states.min() < 0 or states.max() >= self.n_states):
            raise InvalidInputError(f"State indices must lie in [1, {self.n_states}].")
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return self.states.size

    @classmethod
    def from_one_based(cls, labels, n_states: int) -> "StatePath":
        return cls(states=np.asarray(labels, dtype=np.int64) - 1, n_states=n_states)

    def one_based(self) -> np.ndarray:
        return self.states + 1
