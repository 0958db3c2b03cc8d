"""Fixed-layout pairwise summation.

The block layout depends only on the array length, so a reduction gives the same
bits no matter how many workers produced the inputs or evaluated other points.
"""

import math
from typing import Tuple

import numpy as np

BLOCK_SIZE = 1 << 14


def pairwise_sum(values: np.ndarray, block_size: int = BLOCK_SIZE) -> float:
    values = np.ascontiguousarray(values, dtype=np.float64).ravel()
    n = values.size
    if n == 0:
        return 0.0
    n_full = n // block_size
    partials = []
    if n_full:
        partials.append(np.add.reduce(values[: n_full * block_size].reshape(n_full, block_size), axis=1))
    if n % block_size:
        partials.append(np.array([np.add.reduce(values[n_full * block_size :])]))
    level = np.concatenate(partials)
    while level.size > 1:
        if level.size % 2:
            level = np.append(level, 0.0)
        level = level[0::2] + level[1::2]
    return float(level[0])


def mean_and_stderr(values: np.ndarray, block_size: int = BLOCK_SIZE) -> Tuple[float, float]:
    """Sample mean and its standard error (Bessel-corrected variance over N)."""
    values = np.ascontiguousarray(values, dtype=np.float64).ravel()
    n = values.size
    if n == 0:
        raise ValueError("cannot average an empty array")
    mean = pairwise_sum(values, block_size) / n
    if n == 1:
        return mean, 0.0
    deviations = values - mean
    variance = pairwise_sum(deviations * deviations, block_size) / (n - 1)
    return mean, math.sqrt(variance / n)


__all__ = ["BLOCK_SIZE", "pairwise_sum", "mean_and_stderr"]
