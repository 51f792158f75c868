from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from lmsc_hmm.src.common.exceptions import InvalidInputError
from lmsc_hmm.src.common.sequences import ObservationSequence


@dataclass(frozen=True, eq=False)
class EmpiricalPdf:
    """
    Histogram density estimate.

    Attributes:
        bin_edges (np.ndarray): B + 1 increasing amplitudes.
        density (np.ndarray): B per-bin density values integrating to 1.
    """
    bin_edges: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        density = np.asarray(self.density, dtype=float)
        if edges.ndim != 1 or edges.size != density.size + 1 or density.size < 1:
            raise InvalidInputError(f"Need B + 1 edges for B bins, got {edges.size} edges and {density.size} bins.")
        if np.any(np.diff(edges) <= 0):
            raise InvalidInputError("Bin edges must be strictly increasing.")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "density", density)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def cdf_at_edges(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.density * self.widths)))

    def quantile(self, q: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return np.interp(q, self.cdf_at_edges(), self.bin_edges)


def empirical_pdf(
        obs: ObservationSequence,
        bins: Union[int, Sequence[float]] = 100,
        value_range: Optional[Tuple[float, float]] = None,
) -> EmpiricalPdf:
    """
    Builds a normalized histogram of the observed amplitudes.

    Args:
        obs (ObservationSequence): Amplitude samples.
        bins (Union[int, Sequence[float]]): Bin count or explicit edges.
        value_range (Optional[Tuple[float, float]]): Range for an integer bin count;
            defaults to the sample range.

    Returns:
        EmpiricalPdf: Density per bin; samples outside explicit edges are ignored.

    Raises:
        InvalidInputError: If there is no sample inside the bins, or bins < 1.
    """
    amplitudes = np.asarray(obs.amplitudes if isinstance(obs, ObservationSequence) else obs, dtype=float)
    if amplitudes.size == 0:
        raise InvalidInputError("Cannot build a density from an empty observation sequence.")
    if np.isscalar(bins) and int(bins) < 1:
        raise InvalidInputError(f"Need at least one bin, got {bins}.")

    counts, edges = np.histogram(amplitudes, bins=bins, range=value_range)
    if counts.sum() == 0:
        raise InvalidInputError("No sample falls inside the histogram bins.")

    density = counts / (counts.sum() * np.diff(edges))
    return EmpiricalPdf(bin_edges=edges, density=density)
