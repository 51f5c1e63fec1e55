"""Simulated distributed ranks with deterministic collectives.

A :class:`RankWorld` shards points over ``p`` simulated ranks. All
cross-rank data movement goes through the collectives here, which are
deterministic by construction: reductions combine per-rank contributions
in fixed rank order, and the global sort orders by (key, global id) so
the result is a pure function of the input multiset.

Floating-point reductions additionally support *segment-resolved*
partials: contributions are resolved over ``SEGMENTS`` fixed, equally
split position ranges instead of one value per rank. Because rank
boundaries coincide with segment boundaries whenever ``p`` divides
``SEGMENTS``, every segment partial is computed by exactly one rank and
the combined result is bit-identical for p in {1, 2, 4, 8, ...}. Plain
per-rank float sums would differ across p in the last ulps and let
tie-sensitive decisions diverge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SEGMENTS",
    "CollectiveLog",
    "Shard",
    "RankWorld",
    "allreduce_sum",
    "allreduce_extreme",
    "global_sort_redistribute",
    "weighted_mean_reduce",
    "gather_rows",
    "segment_block_sums",
]

SEGMENTS = 256


@dataclass
class CollectiveLog:
    """Operation counts and element volumes per collective kind."""

    counts: dict = field(default_factory=dict)
    volumes: dict = field(default_factory=dict)

    def record(self, kind: str, elements: int) -> None:
        self.counts[kind] = self.counts.get(kind, 0) + 1
        self.volumes[kind] = self.volumes.get(kind, 0) + int(elements)


@dataclass
class Shard:
    """One rank's contiguous slice of the global point sequence.

    ``offset`` is the global position of the first local point; ``gids``
    are the original vertex ids carried through redistribution.
    """

    gids: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    offset: int

    @property
    def size(self) -> int:
        return self.gids.shape[0]

    def positions(self) -> np.ndarray:
        return self.offset + np.arange(self.size, dtype=np.int64)


def _split_bounds(n: int, parts: int) -> np.ndarray:
    return (np.arange(parts + 1, dtype=np.int64) * n) // parts


class RankWorld:
    """``p`` simulated ranks over an (n, d) point set with weights."""

    def __init__(self, shards: list[Shard], n: int, dim: int, log: CollectiveLog | None = None):
        self.shards = shards
        self.p = len(shards)
        self.n = n
        self.dim = dim
        self.log = log if log is not None else CollectiveLog()
        self.segment_bounds = _split_bounds(n, SEGMENTS)

    @classmethod
    def from_points(cls, points, weights=None, p: int = 1) -> "RankWorld":
        points = np.asarray(points, dtype=np.float64)
        n = points.shape[0]
        if p < 1 or p > n:
            raise ValueError(f"rank count {p} out of range 1..{n}")
        if weights is None:
            weights = np.ones(n, dtype=np.float64)
        weights = np.asarray(weights, dtype=np.float64)
        bounds = _split_bounds(n, p)
        shards = [
            Shard(
                gids=np.arange(bounds[r], bounds[r + 1], dtype=np.int64),
                points=points[bounds[r] : bounds[r + 1]],
                weights=weights[bounds[r] : bounds[r + 1]],
                offset=int(bounds[r]),
            )
            for r in range(p)
        ]
        return cls(shards, n, points.shape[1])

    @classmethod
    def from_graph(cls, graph, p: int = 1) -> "RankWorld":
        return cls.from_points(graph.coords, graph.vertex_weights, p)


def allreduce_sum(world: RankWorld, contributions: list[np.ndarray]) -> np.ndarray:
    """Element-wise sum of one array per rank, combined in rank order.

    Fixed combination order makes the result bit-identical across runs
    for a given rank count.
    """
    if len(contributions) != world.p:
        raise ValueError("need one contribution per rank")
    out = np.array(contributions[0], dtype=np.float64, copy=True)
    for c in contributions[1:]:
        if c.shape != out.shape:
            raise ValueError("contribution shapes differ across ranks")
        out += c
    world.log.record("sum-reduce", out.size)
    return out


def allreduce_extreme(world: RankWorld, contributions: list[np.ndarray], op=np.maximum) -> np.ndarray:
    """Element-wise min or max across ranks (exact in any order)."""
    if len(contributions) != world.p:
        raise ValueError("need one contribution per rank")
    out = np.array(contributions[0], dtype=np.float64, copy=True)
    for c in contributions[1:]:
        out = op(out, c)
    world.log.record("sum-reduce", out.size)
    return out


def global_sort_redistribute(world: RankWorld, keys: list[np.ndarray]) -> RankWorld:
    """Sort all points by (key, global id) and deal out contiguous shards.

    Gather-sort-scatter: the resulting order is a pure function of the
    (key, id) multiset, so it is identical for every rank count. New
    shard sizes differ by at most one point.
    """
    if len(keys) != world.p:
        raise ValueError("need one key array per rank")
    all_keys = np.concatenate(keys)
    all_gids = np.concatenate([s.gids for s in world.shards])
    all_points = np.concatenate([s.points for s in world.shards])
    all_weights = np.concatenate([s.weights for s in world.shards])
    if all_keys.shape != all_gids.shape:
        raise ValueError("key count does not match point count")
    order = np.lexsort((all_gids, all_keys))
    bounds = _split_bounds(world.n, world.p)
    shards = [
        Shard(
            gids=all_gids[order[bounds[r] : bounds[r + 1]]],
            points=all_points[order[bounds[r] : bounds[r + 1]]],
            weights=all_weights[order[bounds[r] : bounds[r + 1]]],
            offset=int(bounds[r]),
        )
        for r in range(world.p)
    ]
    world.log.record("sort", world.n * (world.dim + 2))
    return RankWorld(shards, world.n, world.dim, world.log)


def segment_block_sums(
    world: RankWorld, rank: int, assignment: np.ndarray, values: np.ndarray, k: int
) -> np.ndarray:
    """One rank's per-(segment, block) sums of per-point values.

    ``assignment`` holds block ids, -1 meaning the point contributes
    nothing. ``values`` is (m,) or (m, c). Returns (SEGMENTS, k) or
    (SEGMENTS, k, c). Accumulation order within a cell is the local
    point order, which redistribution fixes globally, so the partials
    are independent of the rank count.
    """
    shard = world.shards[rank]
    seg = np.searchsorted(world.segment_bounds, shard.positions(), side="right") - 1
    valid = assignment >= 0
    key = seg[valid] * k + assignment[valid]
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        return np.bincount(key, weights=values[valid], minlength=SEGMENTS * k).reshape(
            SEGMENTS, k
        )
    cols = [
        np.bincount(key, weights=values[valid, c], minlength=SEGMENTS * k)
        for c in range(values.shape[1])
    ]
    return np.stack(cols, axis=1).reshape(SEGMENTS, k, values.shape[1])


def weighted_mean_reduce(
    world: RankWorld, partial_sums: list[np.ndarray], partial_weights: list[np.ndarray]
):
    """Combine per-rank weighted-sum partials into global centers.

    Partials are either plain ``(k, d)`` / ``(k,)`` per rank, or
    segment-resolved ``(SEGMENTS, k, d)`` / ``(SEGMENTS, k)`` as produced
    by :func:`segment_block_sums` (bit-identical across rank counts that
    divide SEGMENTS). Returns ``(centers, totals, empty)`` where rows of
    zero-total blocks are NaN and flagged in the boolean ``empty`` mask
    for the caller to handle.
    """
    sums = allreduce_sum(world, partial_sums)
    weights = allreduce_sum(world, partial_weights)
    if sums.ndim == 3:
        sums = np.add.reduce(sums, axis=0)
        weights = np.add.reduce(weights, axis=0)
    totals = weights
    empty = totals == 0
    safe = np.where(empty, 1.0, totals)
    centers = sums / safe[:, None]
    centers[empty] = np.nan
    return centers, totals, empty


def gather_rows(world: RankWorld, per_rank_rows: list[np.ndarray]) -> np.ndarray:
    """Concatenate per-rank row blocks in rank order (an allgather)."""
    out = np.concatenate(per_rank_rows, axis=0)
    world.log.record("gather", out.size)
    return out
