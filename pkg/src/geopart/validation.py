"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

__all__ = ["check_coords", "check_sample_weight", "check_block_count"]


def check_coords(X) -> np.ndarray:
    """Validate a coordinate matrix: finite float64, shape (n, 2) or (n, 3)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d coordinate array, got shape {X.shape}")
    n, d = X.shape
    if n < 1:
        raise ValueError("need at least one point")
    if d not in (2, 3):
        raise ValueError(f"only 2- or 3-dimensional points are supported, got d={d}")
    if not np.isfinite(X).all():
        raise ValueError("coordinates must be finite")
    return X


def check_sample_weight(sample_weight, n: int) -> np.ndarray:
    """Validate per-point weights; None means unit weights."""
    if sample_weight is None:
        return np.ones(n, dtype=np.float64)
    w = np.asarray(sample_weight, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError(f"sample_weight must have shape ({n},), got {w.shape}")
    if not np.isfinite(w).all() or not (w > 0).all():
        raise ValueError("sample weights must be finite and strictly positive")
    return w


def check_block_count(k, n: int) -> int:
    k = int(k)
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    return k
