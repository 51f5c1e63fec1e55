"""Synthetic inputs: random geometric graphs and regular grid meshes."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .graph import GeometricGraph

__all__ = ["rgg_radius", "generate_random_geometric", "generate_grid_mesh"]


def rgg_radius(n: int, dim: int, avg_degree_target: float) -> float:
    """Connection radius giving the requested expected degree.

    A vertex sees on average ``n * vol(ball(r))`` others in the unit
    cube interior, so r solves deg = n * pi * r^2 in 2D and
    deg = n * (4/3) * pi * r^3 in 3D.
    """
    if dim == 2:
        return float(np.sqrt(avg_degree_target / (np.pi * n)))
    if dim == 3:
        return float((3.0 * avg_degree_target / (4.0 * np.pi * n)) ** (1.0 / 3.0))
    raise ValueError(f"unsupported dimension {dim}")


def generate_random_geometric(
    n: int,
    dim: int,
    avg_degree_target: float,
    seed: int,
    points: np.ndarray | None = None,
) -> GeometricGraph:
    """Random geometric graph on uniform points in the unit cube.

    Vertices are connected iff their distance is at most the radius from
    :func:`rgg_radius`. ``points`` overrides the sampled positions (test
    hook); the radius still comes from the degree target. Unit vertex
    weights, no edge weights. Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}")
    if avg_degree_target <= 0:
        raise ValueError("degree target must be positive")
    if points is None:
        rng = np.random.default_rng(seed)
        points = rng.random((n, dim))
    else:
        points = np.asarray(points, dtype=np.float64)
        if points.shape != (n, dim):
            raise ValueError(f"points override must have shape ({n}, {dim})")
    r = rgg_radius(n, dim, avg_degree_target)
    tree = cKDTree(points)
    pairs = tree.query_pairs(r, output_type="ndarray")
    if pairs.size:
        # canonical edge order: (min, max) sorted
        pairs = np.sort(pairs, axis=1)
        order = np.lexsort((pairs[:, 1], pairs[:, 0]))
        pairs = pairs[order]
    return GeometricGraph.from_edges(n, pairs.reshape(-1, 2), points)


def generate_grid_mesh(side: int, dim: int) -> GeometricGraph:
    """Regular grid mesh with ``side`` vertices per axis.

    ``side**dim`` vertices at integer lattice positions, edges between
    axis neighbors: ``dim * side**(dim-1) * (side-1)`` of them. Unit
    weights.
    """
    if side < 2:
        raise ValueError("side must be >= 2")
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}")
    shape = (side,) * dim
    ids = np.arange(side**dim, dtype=np.int64).reshape(shape)
    edges = []
    for axis in range(dim):
        lo = ids.take(np.arange(side - 1), axis=axis).ravel()
        hi = ids.take(np.arange(1, side), axis=axis).ravel()
        edges.append(np.stack([lo, hi], axis=1))
    edges = np.concatenate(edges)
    grids = np.meshgrid(*[np.arange(side, dtype=np.float64)] * dim, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    return GeometricGraph.from_edges(side**dim, edges, coords)
