"""Points, axis-aligned boxes, and Hilbert space-filling-curve keys.

Coordinates are float64 arrays of dimension 2 or 3. Curve keys pack
``d * depth`` bits into one unsigned 64-bit integer, so the default
depths (31 in 2D, 20 in 3D) stay within 62 bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GeometryError",
    "BoundingBox",
    "SfcKey",
    "DEFAULT_DEPTH",
    "squared_distance",
    "min_distance_point_box",
    "min_distances_points_box",
    "hilbert_key",
    "hilbert_keys",
    "hilbert_cell_keys",
    "point_cells",
]

DEFAULT_DEPTH = {2: 31, 3: 20}

# Points may stick out of a box by this relative margin and still be
# clamped to the boundary cell instead of rejected.
_CLAMP_RTOL = 1e-9


class GeometryError(ValueError):
    """Raised for malformed geometric input."""


def squared_distance(a, b) -> float:
    """Squared Euclidean distance between two points of equal dimension."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise GeometryError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise GeometryError("non-finite coordinate")
    d = a - b
    return float(np.dot(d, d))


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box given by componentwise lower and upper corners."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise GeometryError("box corners must be 1-d arrays of equal length")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise GeometryError("non-finite box corner")
        if (lo > hi).any():
            raise GeometryError("box lower corner exceeds upper corner")

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @classmethod
    def of_points(cls, points) -> "BoundingBox":
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[0] == 0:
            raise GeometryError("need a nonempty (n, d) point array")
        return cls(points.min(axis=0), points.max(axis=0))

    def diagonal(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=np.float64)
        return bool((p >= self.lo).all() and (p <= self.hi).all())


def min_distance_point_box(box: BoundingBox, p) -> float:
    """Distance from a point to the closest point of a box (0 if inside)."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != box.lo.shape:
        raise GeometryError("point dimension does not match box")
    nearest = np.clip(p, box.lo, box.hi)
    return float(np.linalg.norm(p - nearest))


def min_distances_points_box(box: BoundingBox, points: np.ndarray) -> np.ndarray:
    """Vectorized :func:`min_distance_point_box` for an (m, d) point array."""
    nearest = np.clip(points, box.lo, box.hi)
    return np.linalg.norm(points - nearest, axis=1)


@dataclass(frozen=True)
class SfcKey:
    """A Hilbert curve key: ``value`` holds ``dim * depth`` significant bits."""

    value: int
    depth: int


def point_cells(points: np.ndarray, box: BoundingBox, depth: int) -> np.ndarray:
    """Map points to integer grid cells of a ``2^depth`` per-axis subdivision.

    Points on the upper box face land in the last cell; points outside the
    box beyond a small relative tolerance are rejected.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != box.dim:
        raise GeometryError("points must be (n, d) matching the box dimension")
    if depth < 1:
        raise GeometryError("curve depth must be >= 1")
    extent = box.hi - box.lo
    margin = _CLAMP_RTOL * np.maximum(extent, 1.0)
    if ((points < box.lo - margin) | (points > box.hi + margin)).any():
        raise GeometryError("point lies outside the box")
    side = np.uint64(1) << np.uint64(depth)
    safe_extent = np.where(extent > 0, extent, 1.0)
    scaled = (points - box.lo) / safe_extent * float(side)
    cells = np.floor(scaled)
    np.clip(cells, 0, float(side) - 1.0, out=cells)
    return cells.astype(np.uint64)


def hilbert_cell_keys(cells: np.ndarray, depth: int) -> np.ndarray:
    """Hilbert keys of integer grid cells, vectorized over an (n, d) array.

    Transpose-format encoding: undo the excess-work transform, Gray-code,
    then interleave bits with axis 0 most significant. Consecutive keys
    visit face-adjacent cells and the map is a bijection onto
    ``[0, 2^(d*depth))``.
    """
    X = np.array(cells, dtype=np.uint64, copy=True)
    if X.ndim != 2:
        raise GeometryError("cells must be an (n, d) array")
    n, d = X.shape
    if d not in (2, 3):
        raise GeometryError(f"unsupported dimension {d}")
    if depth < 1 or d * depth > 62:
        raise GeometryError(f"depth {depth} out of range for dimension {d}")
    if n and int(X.max()) >> depth:
        raise GeometryError("cell coordinate exceeds the grid for this depth")
    one = np.uint64(1)
    zero = np.uint64(0)

    Q = one << np.uint64(depth - 1)
    while Q > one:
        P = Q - one
        for i in range(d):
            flip = (X[:, i] & Q) != 0
            X[:, 0] = np.where(flip, X[:, 0] ^ P, X[:, 0])
            t = np.where(flip, zero, (X[:, 0] ^ X[:, i]) & P)
            X[:, 0] ^= t
            X[:, i] ^= t
        Q >>= one
    for i in range(1, d):
        X[:, i] ^= X[:, i - 1]
    t = np.zeros(n, dtype=np.uint64)
    Q = one << np.uint64(depth - 1)
    while Q > one:
        t = np.where((X[:, d - 1] & Q) != 0, t ^ (Q - one), t)
        Q >>= one
    X ^= t[:, None]

    key = np.zeros(n, dtype=np.uint64)
    for j in range(depth - 1, -1, -1):
        for i in range(d):
            key = (key << one) | ((X[:, i] >> np.uint64(j)) & one)
    return key


def hilbert_keys(points, box: BoundingBox, depth: int | None = None) -> np.ndarray:
    """Hilbert keys for an (n, d) point array within ``box``."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise GeometryError("points must be an (n, d) array")
    d = points.shape[1]
    if depth is None:
        if d not in DEFAULT_DEPTH:
            raise GeometryError(f"unsupported dimension {d}")
        depth = DEFAULT_DEPTH[d]
    return hilbert_cell_keys(point_cells(points, box, depth), depth)


def hilbert_key(p, box: BoundingBox, depth: int | None = None) -> SfcKey:
    """Hilbert key of a single point; see :func:`hilbert_keys`."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise GeometryError("expected a single point")
    d = p.shape[0]
    if depth is None:
        if d not in DEFAULT_DEPTH:
            raise GeometryError(f"unsupported dimension {d}")
        depth = DEFAULT_DEPTH[d]
    value = hilbert_keys(p[None, :], box, depth)[0]
    return SfcKey(value=int(value), depth=depth)
