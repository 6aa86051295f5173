"""Input validation helpers shared by the estimators and loss functions."""

from __future__ import annotations

import numpy as np

from . import errors
from .graphs import Graph


def check_distance_matrix(d, n: int | None = None) -> np.ndarray:
    """Validate an all-pairs hop-distance matrix and return it as float64.

    Requires a square symmetric matrix with zero diagonal and strictly
    positive finite off-diagonal entries.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise errors.DimensionMismatch(f"distance matrix must be square, got {d.shape}")
    if n is not None and d.shape[0] != n:
        raise errors.DimensionMismatch(f"distance matrix {d.shape} does not match n={n}")
    if not np.all(np.isfinite(d)):
        raise errors.DimensionMismatch("distance matrix has non-finite entries")
    if np.any(np.diag(d) != 0.0):
        raise errors.DimensionMismatch("distance matrix diagonal must be zero")
    if d.shape[0] > 1:
        off = d[~np.eye(d.shape[0], dtype=bool)]
        if np.any(off <= 0.0):
            raise errors.DimensionMismatch("off-diagonal distances must be positive")
    if not np.array_equal(d, d.T):
        raise errors.DimensionMismatch("distance matrix must be symmetric")
    return d


def check_layout(x, n: int | None = None) -> np.ndarray:
    """Validate an n x 2 coordinate matrix and return it as float64."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != 2:
        raise errors.DimensionMismatch(f"layout must be n x 2, got {x.shape}")
    if n is not None and x.shape[0] != n:
        raise errors.DimensionMismatch(f"layout has {x.shape[0]} rows, expected {n}")
    if not np.all(np.isfinite(x)):
        raise errors.DimensionMismatch("layout has non-finite coordinates")
    return x


def check_graph(g) -> Graph:
    if not isinstance(g, Graph):
        raise TypeError(f"expected a Graph, got {type(g).__name__}")
    return g
