"""Shared input checks used by the estimator and functional surfaces."""

import numpy as np
import scipy.sparse as sp


def check_labels(y, n: int | None = None) -> np.ndarray:
    """Return labels as a float array after checking every entry is +-1."""
    arr = np.asarray(y, dtype=float).ravel()
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} labels, got {arr.shape[0]}")
    bad = ~np.isin(arr, (-1.0, 1.0))
    if bad.any():
        raise ValueError(f"labels must be +1 or -1; offending values {np.unique(arr[bad])}")
    return arr


def check_vector(v, dim: int, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float).ravel()
    if arr.shape[0] != dim:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {dim}")
    return arr


def as_csc_columns(X, d: int | None = None) -> sp.csc_matrix:
    """Coerce X to csc with examples as columns (shape d x n)."""
    mat = sp.csc_matrix(X, dtype=float)
    if d is not None and mat.shape[0] != d:
        raise ValueError(f"feature dimension {mat.shape[0]} != expected {d}")
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat
