"""Baseline geometric partitioners: recursive bisection and curve cuts."""

from __future__ import annotations

import numpy as np

from .geometry import DEFAULT_DEPTH, BoundingBox, GeometryError, hilbert_keys
from .graph import GeometricGraph, Partition
from .metrics import imbalance

__all__ = ["rcb_labels", "rcb_partition", "sfc_labels", "sfc_partition"]


def rcb_labels(coords: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    """Recursive coordinate bisection of a weighted point set.

    Each step splits the widest axis of the current subset at the
    weighted median, budgeting ceil(k/2) blocks to the lighter-indexed
    side; splits are stable by vertex id so duplicate coordinates
    cannot reorder. Block ids number the leaves left to right.
    """
    coords = np.asarray(coords, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = coords.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    labels = np.empty(n, dtype=np.int64)
    # worklist of (ids, budget, first block id); avoids deep recursion
    stack = [(np.arange(n, dtype=np.int64), k, 0)]
    while stack:
        ids, budget, base = stack.pop()
        if budget == 1:
            labels[ids] = base
            continue
        k1 = (budget + 1) // 2
        k2 = budget // 2
        sub = coords[ids]
        axis = int(np.argmax(sub.max(axis=0) - sub.min(axis=0)))
        order = np.lexsort((ids, sub[:, axis]))
        sorted_ids = ids[order]
        cw = np.cumsum(weights[sorted_ids])
        target = cw[-1] * (k1 / budget)
        cut = int(np.searchsorted(cw, target, side="left")) + 1
        cut = min(max(cut, k1), ids.size - k2)
        stack.append((sorted_ids[:cut], k1, base))
        stack.append((sorted_ids[cut:], k2, base + k1))
    return labels


def rcb_partition(graph: GeometricGraph, k: int, epsilon: float = 0.03) -> Partition:
    """Recursive coordinate bisection of a graph's vertex set."""
    labels = rcb_labels(graph.coords, graph.vertex_weights, k)
    bw = np.bincount(labels, weights=graph.vertex_weights, minlength=k)
    return Partition(
        assignment=labels,
        k=k,
        balance_failed=imbalance(bw) > epsilon,
        empty_blocks=np.flatnonzero(bw == 0),
    )


def sfc_labels(
    coords: np.ndarray, weights: np.ndarray, k: int, depth: int | None = None
) -> np.ndarray:
    """Cut the Hilbert-sorted vertex sequence at weight multiples of total/k.

    A vertex whose prefix weight (weight strictly before it in curve
    order) is w lands in block floor(w * k / total), clipped to k-1.
    Unit weights with k dividing n give equal consecutive runs.
    """
    coords = np.asarray(coords, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    n = coords.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    d = coords.shape[1]
    if depth is None:
        depth = DEFAULT_DEPTH.get(d)
        if depth is None:
            raise GeometryError(f"unsupported dimension {d}")
    keys = hilbert_keys(coords, BoundingBox.of_points(coords), depth)
    order = np.lexsort((np.arange(n), keys))
    w = weights[order]
    before = np.cumsum(w) - w
    total = float(w.sum())
    block = np.minimum((before * k / total).astype(np.int64), k - 1)
    labels = np.empty(n, dtype=np.int64)
    labels[order] = block
    return labels


def sfc_partition(
    graph: GeometricGraph, k: int, depth: int | None = None, epsilon: float | None = None
) -> Partition:
    """Space-filling-curve partition of a graph's vertex set."""
    labels = sfc_labels(graph.coords, graph.vertex_weights, k, depth)
    bw = np.bincount(labels, weights=graph.vertex_weights, minlength=k)
    failed = imbalance(bw) > epsilon if epsilon is not None else False
    return Partition(
        assignment=labels, k=k, balance_failed=failed, empty_blocks=np.flatnonzero(bw == 0)
    )
