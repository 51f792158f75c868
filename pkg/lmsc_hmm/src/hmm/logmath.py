"""
Jacobi logarithm (max*) for log-domain sums.
"""
import math
from functools import reduce
from typing import Iterable

import numpy as np

# Beyond this gap exp(-gap) is below double precision relative to 1.
CORRECTION_CUTOFF = 37.0


def max_star(k1: float, k2: float) -> float:
    """
    Computes ln(exp(k1) + exp(k2)) as max(k1, k2) + ln(1 + exp(-|k1 - k2|)).

    Args:
        k1 (float): Log-value in [-inf, +inf).
        k2 (float): Log-value in [-inf, +inf).

    Returns:
        float: The log of the summed linear values; -inf is the identity element.
    """
    if k1 == -math.inf:
        return k2
    if k2 == -math.inf:
        return k1

    larger = max(k1, k2)
    gap = abs(k1 - k2)
    if gap > CORRECTION_CUTOFF:
        return larger
    return larger + math.log1p(math.exp(-gap))


def max_star_fold(values: Iterable[float]) -> float:
    """
    Left fold of max* over any number of log-values; -inf for an empty input.
    """
    return reduce(max_star, values, -math.inf)


def max_star_reduce(values: np.ndarray, axis=None, keepdims: bool = False) -> np.ndarray:
    """
    Array form of the max* fold along `axis`.

    `np.logaddexp` evaluates the same max-plus-correction identity per pair,
    and its `reduce` is the left fold.
    """
    values = np.asarray(values, dtype=float)
    if axis is None:
        return np.logaddexp.reduce(values.ravel())
    if isinstance(axis, tuple):
        moved = np.moveaxis(values, axis, tuple(range(-len(axis), 0)))
        flat = moved.reshape(moved.shape[:-len(axis)] + (-1,))
        folded = np.logaddexp.reduce(flat, axis=-1)
        if keepdims:
            folded = np.expand_dims(folded, axis)
        return folded
    return np.logaddexp.reduce(values, axis=axis, keepdims=keepdims)
