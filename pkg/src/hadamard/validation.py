"""Input checks shared by the estimator and the free functions."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.utils.validation import check_array

from .kernel import KernelDistribution
from .loggrid import LogGrid


def check_multi_index(alpha, dim: int) -> tuple[int, ...]:
    """Coerce to a tuple of ``dim`` nonnegative ints; scalars are accepted for ``dim == 1``."""
    if np.ndim(alpha) == 0:
        alpha = (alpha,)
    alpha = tuple(alpha)
    if len(alpha) != dim:
        raise ValueError(f"multi-index {alpha} does not have length {dim}")
    if any(int(a) != a or a < 0 for a in alpha):
        raise ValueError(f"multi-index entries must be nonnegative integers, got {alpha}")
    return tuple(int(a) for a in alpha)


def check_kernel(kernel) -> KernelDistribution:
    if not isinstance(kernel, KernelDistribution):
        raise TypeError(f"kernel must be a KernelDistribution, got {type(kernel).__name__}")
    return kernel


def check_sampled_rows(X, grid: LogGrid) -> np.ndarray:
    """Batch of sampled functions as ``(n_samples, *grid.shape)`` float array."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] == grid.size:
        rows = check_array(X, ensure_all_finite=True)
    elif X.shape[1:] == grid.shape:
        rows = check_array(X, allow_nd=True, ensure_all_finite=True)
    else:
        raise ValueError(f"expected rows of {grid.size} samples or shape {grid.shape}, "
                         f"got array of shape {X.shape}")
    return rows.reshape((rows.shape[0],) + grid.shape)


def check_same_grid(grids: Sequence[LogGrid]) -> LogGrid:
    first = grids[0]
    if any(g != first for g in grids[1:]):
        raise ValueError("inputs are sampled on different grids")
    return first
