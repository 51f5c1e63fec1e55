"""Balanced k-means with per-cluster influence weights over simulated ranks.

The effective distance from a point to cluster c is the Euclidean
distance to c's center divided by c's influence, making clusters
multiplicatively weighted Voronoi cells. Balancing adapts influences
toward uniform block weights; erosion decays the influence of moving
centers back toward one so the geometry stays primary.

Per-point upper/lower bounds on effective distances allow most points
to skip the center scan entirely (the classic single-bound pruning
scheme carried over to effective distances), and per-rank bounding-box
distances prune the scan order for the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    DEFAULT_DEPTH,
    BoundingBox,
    GeometryError,
    hilbert_keys,
    min_distances_points_box,
    squared_distance,
)
from .graph import GeometricGraph, Partition
from .metrics import imbalance
from .ranksim import (
    RankWorld,
    allreduce_extreme,
    allreduce_sum,
    gather_rows,
    global_sort_redistribute,
    segment_block_sums,
    weighted_mean_reduce,
)

__all__ = [
    "KMeansSettings",
    "ClusterState",
    "PointBounds",
    "BalanceInfo",
    "IterationRecord",
    "KMeansStats",
    "effective_distance",
    "initial_center_positions",
    "adapt_influence",
    "erode_influence",
    "relax_bounds",
    "assign_and_balance",
    "balanced_kmeans",
    "balanced_kmeans_points",
]

# Relaxed bounds get a hair of slack so that accumulated rounding can
# never push a float bound past the exact value it must dominate.
_UB_SLACK = 1.0 + 1e-12
_LB_SLACK = 1.0 - 1e-12


@dataclass(frozen=True)
class KMeansSettings:
    """Tuning knobs for :func:`balanced_kmeans`.

    ``delta_threshold`` of None means 1e-4 times the bounding-box
    diagonal. ``init_sample`` is the first subsample size of the warmup
    schedule (0 disables warmup). ``audit_bounds`` turns on exact
    recomputation of every bound decision (slow; for verification).
    """

    k: int
    epsilon: float = 0.03
    max_iter: int = 50
    max_balance_iter: int = 20
    influence_step_cap: float = 0.05
    delta_threshold: float | None = None
    erosion: bool = True
    init_sample: int = 100
    seed: int = 0
    sfc_depth: int | None = None
    audit_bounds: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.max_iter < 1 or self.max_balance_iter < 1:
            raise ValueError("iteration budgets must be >= 1")
        if not 0 < self.influence_step_cap < 1:
            raise ValueError("influence_step_cap must lie in (0, 1)")
        if self.delta_threshold is not None and self.delta_threshold < 0:
            raise ValueError("delta_threshold must be >= 0")
        if self.init_sample < 0:
            raise ValueError("init_sample must be >= 0")
        if self.sfc_depth is not None and self.sfc_depth < 1:
            raise ValueError("sfc_depth must be >= 1")


@dataclass
class ClusterState:
    """Replicated cluster state: centers, influences, weights, last moves."""

    centers: np.ndarray
    influence: np.ndarray
    block_weights: np.ndarray
    last_move: np.ndarray

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @classmethod
    def initial(cls, centers: np.ndarray) -> "ClusterState":
        k = centers.shape[0]
        return cls(
            centers=np.array(centers, dtype=np.float64),
            influence=np.ones(k),
            block_weights=np.zeros(k),
            last_move=np.zeros(k),
        )


@dataclass
class PointBounds:
    """Per-point bounds on effective distances for one rank's points.

    ``upper[i]`` dominates the effective distance to the assigned
    center, ``lower[i]`` is dominated by the second-smallest effective
    distance; whenever upper < lower the previous assignment is still
    the unique argmin and the scan can be skipped.
    """

    upper: np.ndarray
    lower: np.ndarray

    @classmethod
    def fresh(cls, m: int) -> "PointBounds":
        return cls(upper=np.full(m, np.inf), lower=np.zeros(m))


def effective_distance(p, center, influence: float) -> float:
    """Euclidean distance divided by the cluster's influence."""
    if not influence > 0:
        raise ValueError("influence must be strictly positive")
    return math.sqrt(squared_distance(p, center)) / influence


def _column_effdist(points: np.ndarray, center: np.ndarray, influence: float) -> np.ndarray:
    diff = points - center
    return np.sqrt(np.einsum("ij,ij->i", diff, diff)) / influence


def _effdist_matrix(points: np.ndarray, centers: np.ndarray, influence: np.ndarray) -> np.ndarray:
    # column-by-column so audit arithmetic matches the scan exactly
    return np.stack(
        [_column_effdist(points, centers[c], influence[c]) for c in range(centers.shape[0])],
        axis=1,
    )


def initial_center_positions(n: int, k: int) -> np.ndarray:
    """Global sorted positions of the initial centers: floor(i*n/k + n/(2k))."""
    i = np.arange(k, dtype=np.int64)
    return ((2 * i + 1) * n) // (2 * k)


def adapt_influence(state: ClusterState, target_weight: float, cap: float) -> ClusterState:
    """Nudge influences toward uniform block weights.

    Each influence is scaled by (target / current)^(1/d), clamped so
    the multiplicative change stays within [1 - cap, 1 + cap]. A block
    with zero current weight gets the full upward step.
    """
    if not 0 < cap < 1:
        raise ValueError("cap must lie in (0, 1)")
    if not target_weight > 0:
        raise ValueError("target weight must be positive")
    current = state.block_weights
    with np.errstate(divide="ignore"):
        gamma = np.where(current > 0, target_weight / np.where(current > 0, current, 1.0), np.inf)
    factor = np.clip(gamma ** (1.0 / state.dim), 1.0 - cap, 1.0 + cap)
    return replace(state, influence=state.influence * factor)


def erode_influence(state: ClusterState, beta: float) -> ClusterState:
    """Decay influences toward one in proportion to center movement.

    With move delta and scale beta, alpha = 2 / (1 + exp(-delta/beta)) - 1
    lies in [0, 1); influence becomes influence^(1 - alpha), so a center
    that jumped far loses most of its influence while a settled one
    keeps it.
    """
    if not beta > 0:
        raise ValueError("beta must be strictly positive")
    alpha = 2.0 / (1.0 + np.exp(-state.last_move / beta)) - 1.0
    return replace(state, influence=state.influence ** (1.0 - alpha))


def relax_bounds(
    bounds: PointBounds,
    assignment: np.ndarray,
    old_influence: np.ndarray,
    new_influence: np.ndarray,
    center_moves: np.ndarray,
) -> PointBounds:
    """Keep bounds sound after centers moved and influences changed.

    For a point assigned to c the old upper bound says
    dist <= ub * I_old(c); after a move of delta(c) the distance grows by
    at most delta(c), so ub' = ub * I_old(c)/I_new(c) + delta(c)/I_new(c).
    The lower bound shrinks by the worst case over all clusters:
    lb' = lb * min_c I_old/I_new - max_c delta(c)/I_new(c), floored at 0.
    """
    if (
        center_moves.shape == old_influence.shape
        and not center_moves.any()
        and np.array_equal(old_influence, new_influence)
    ):
        return bounds
    ratio = old_influence / new_influence
    shift = center_moves / new_influence
    assigned = assignment >= 0
    a = np.where(assigned, assignment, 0)
    upper = np.where(
        assigned,
        (bounds.upper * ratio[a] + shift[a]) * _UB_SLACK,
        bounds.upper,
    )
    lower = np.maximum((bounds.lower * ratio.min() - shift.max()) * _LB_SLACK, 0.0)
    return PointBounds(upper=upper, lower=lower)


@dataclass
class BalanceInfo:
    """Outcome of one assign-and-balance call."""

    rounds: int
    imbalance: float
    block_weights: np.ndarray
    skip_decisions: int
    total_decisions: int
    distance_evals: int
    imbalance_history: list = field(default_factory=list)


@dataclass
class IterationRecord:
    phase: str  # "sample" or "full"
    active_points: int
    balance_rounds: int
    imbalance: float
    skip_decisions: int
    total_decisions: int
    distance_evals: int
    objective: float
    max_move: float


@dataclass
class KMeansStats:
    iterations: list = field(default_factory=list)
    converged: bool = False
    balance_failed: bool = False
    audited_point_iterations: int = 0
    bound_violations: int = 0
    skip_check_failures: int = 0
    final_state: "ClusterState | None" = None

    def skip_fraction(self, last: int | None = None) -> float:
        recs = [r for r in self.iterations if r.phase == "full"]
        if last is not None:
            recs = recs[-last:]
        total = sum(r.total_decisions for r in recs)
        if total == 0:
            return 0.0
        return sum(r.skip_decisions for r in recs) / total


class _Counters:
    __slots__ = ("skips", "decisions", "dist_evals")

    def __init__(self):
        self.skips = 0
        self.decisions = 0
        self.dist_evals = 0


def _scan_rank(points, active_idx, assignment, bounds, state, counters):
    """Reassign one rank's active points to their effective-distance argmin.

    Points whose bounds already prove the argmin unchanged keep their
    assignment untouched. The rest scan centers in order of increasing
    box-distance lower bound and stop as soon as that bound exceeds
    their current second-best value; ties in effective distance go to
    the lower center index. Bounds of scanned points are tightened to
    the exact best / second-best values.
    """
    k = state.k
    prev = assignment[active_idx]
    counters.decisions += active_idx.size
    skippable = (prev >= 0) & (bounds.upper[active_idx] < bounds.lower[active_idx])
    counters.skips += int(np.count_nonzero(skippable))
    scan_idx = active_idx[~skippable]
    if scan_idx.size == 0:
        return
    pts = points[scan_idx]
    box = BoundingBox(pts.min(axis=0), pts.max(axis=0))
    box_dist = min_distances_points_box(box, state.centers) / state.influence
    order = np.lexsort((np.arange(k), box_dist))
    sorted_bound = box_dist[order]

    m = scan_idx.size
    best = np.full(m, np.inf)
    second = np.full(m, np.inf)
    best_idx = np.zeros(m, dtype=np.int64)
    alive = np.arange(m)
    for j in range(k):
        if alive.size == 0:
            break
        still = sorted_bound[j] <= second[alive]
        alive = alive[still]
        if alive.size == 0:
            break
        c = int(order[j])
        dist = _column_effdist(pts[alive], state.centers[c], state.influence[c])
        counters.dist_evals += alive.size
        b, s, bi = best[alive], second[alive], best_idx[alive]
        wins = (dist < b) | ((dist == b) & (c < bi))
        second[alive] = np.where(wins, b, np.minimum(s, dist))
        best[alive] = np.where(wins, dist, b)
        best_idx[alive] = np.where(wins, c, bi)

    assignment[scan_idx] = best_idx
    bounds.upper[scan_idx] = best
    bounds.lower[scan_idx] = second


def _audit_rank(points, active_idx, assignment, bounds, state, stats):
    """Exact recheck of the bound contracts for every active point."""
    if active_idx.size == 0:
        return
    mat = _effdist_matrix(points[active_idx], state.centers, state.influence)
    prev = assignment[active_idx]
    assigned = prev >= 0
    own = mat[np.arange(active_idx.size), np.where(assigned, prev, 0)]
    ub = bounds.upper[active_idx]
    lb = bounds.lower[active_idx]
    stats.audited_point_iterations += int(active_idx.size)
    stats.bound_violations += int(np.count_nonzero(assigned & (ub < own)))
    if state.k > 1:
        second = np.partition(mat, 1, axis=1)[:, 1]
        stats.bound_violations += int(np.count_nonzero(lb > second))
    skip = assigned & (ub < lb)
    if skip.any():
        exact_arg = np.argmin(mat[skip], axis=1)
        stats.skip_check_failures += int(np.count_nonzero(exact_arg != prev[skip]))


def _global_block_weights(world, assignments, active, k):
    partials = []
    for r in range(world.p):
        a = assignments[r] if active is None else np.where(active[r], assignments[r], -1)
        partials.append(segment_block_sums(world, r, a, world.shards[r].weights, k))
    total = allreduce_sum(world, partials)
    return np.add.reduce(total, axis=0)


def assign_and_balance(
    world: RankWorld,
    state: ClusterState,
    bounds: list[PointBounds],
    assignments: list[np.ndarray],
    settings: KMeansSettings,
    active: list[np.ndarray] | None = None,
    stats: KMeansStats | None = None,
):
    """Assign points to clusters and adapt influences until balanced.

    Repeats (scan, weigh blocks, adapt influences, relax bounds) until
    the imbalance drops to ``settings.epsilon`` or the round budget runs
    out; influences are only adapted when another scan follows, so the
    returned assignment is always the exact argmin under the returned
    state. From the second round whose imbalance rises above the best
    seen so far, each further rise halves the influence step: small
    blocks quantize weight so coarsely that the full step can oscillate
    around the target forever. A single rise is tolerated as a
    transient, and flat rounds keep the step, since the accumulated
    pressure of repeated same-direction adaptation is what eventually
    flips a tied point.
    ``assignments`` and ``bounds`` are updated in place and also
    returned. ``active`` optionally restricts each rank to a point
    subset (warmup samples).
    """
    k = state.k
    counters = _Counters()
    active_idx = [
        np.arange(world.shards[r].size) if active is None else np.flatnonzero(active[r])
        for r in range(world.p)
    ]
    final_imb = math.inf
    best_imb = math.inf
    step = settings.influence_step_cap
    regressions = 0
    history = []
    rounds = 0
    for rnd in range(settings.max_balance_iter):
        rounds += 1
        for r in range(world.p):
            if settings.audit_bounds and stats is not None:
                _audit_rank(
                    world.shards[r].points, active_idx[r], assignments[r], bounds[r], state, stats
                )
            _scan_rank(
                world.shards[r].points, active_idx[r], assignments[r], bounds[r], state, counters
            )
        block_w = _global_block_weights(world, assignments, active, k)
        final_imb = imbalance(block_w)
        history.append(final_imb)
        state = replace(state, block_weights=block_w)
        if final_imb <= settings.epsilon or rnd == settings.max_balance_iter - 1:
            break
        if final_imb > best_imb:
            regressions += 1
            if regressions >= 2:
                step *= 0.5
        best_imb = min(best_imb, final_imb)
        target = float(block_w.sum()) / k
        adapted = adapt_influence(state, target, step)
        zero_move = np.zeros(k)
        for r in range(world.p):
            bounds[r] = relax_bounds(
                bounds[r], assignments[r], state.influence, adapted.influence, zero_move
            )
        state = adapted
    info = BalanceInfo(
        rounds=rounds,
        imbalance=final_imb,
        block_weights=state.block_weights,
        skip_decisions=counters.skips,
        total_decisions=counters.decisions,
        distance_evals=counters.dist_evals,
        imbalance_history=history,
    )
    return assignments, state, bounds, info


def _sample_schedule(n: int, init_sample: int) -> list[int]:
    if init_sample <= 0 or n <= init_sample:
        return []
    rounds = math.ceil(math.log2(n / init_sample))
    return [init_sample * 2**j for j in range(rounds)]


def _weighted_center_partials(world, assignments, active, k):
    sums, wsums = [], []
    for r in range(world.p):
        shard = world.shards[r]
        a = assignments[r] if active is None else np.where(active[r], assignments[r], -1)
        wx = shard.points * shard.weights[:, None]
        sums.append(segment_block_sums(world, r, a, wx, k))
        wsums.append(segment_block_sums(world, r, a, shard.weights, k))
    return sums, wsums


def _cluster_extents(world, state, assignments, active, k):
    """Global max point-to-own-center distance per cluster (exact max)."""
    per_rank = []
    for r in range(world.p):
        shard = world.shards[r]
        a = assignments[r] if active is None else np.where(active[r], assignments[r], -1)
        ext = np.zeros(k)
        valid = a >= 0
        if valid.any():
            diff = shard.points[valid] - state.centers[a[valid]]
            dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            np.maximum.at(ext, a[valid], dist)
        per_rank.append(ext)
    return allreduce_extreme(world, per_rank, np.maximum)


def _objective(world, state, assignments, active):
    vals = []
    for r in range(world.p):
        shard = world.shards[r]
        a = assignments[r] if active is None else np.where(active[r], assignments[r], -1)
        valid = a >= 0
        diff = shard.points[valid] - state.centers[a[valid]]
        sq = np.einsum("ij,ij->i", diff, diff)
        vals.append(np.array([float((sq * shard.weights[valid]).sum())]))
    return float(allreduce_sum(world, vals)[0])


def balanced_kmeans_points(
    points: np.ndarray,
    weights: np.ndarray | None,
    settings: KMeansSettings,
    p: int = 1,
    return_stats: bool = False,
):
    """Partition a raw point set; see :func:`balanced_kmeans`."""
    points = np.asarray(points, dtype=np.float64)
    world = RankWorld.from_points(points, weights, p)
    return _run_pipeline(world, settings, return_stats)


def balanced_kmeans(
    graph: GeometricGraph,
    settings: KMeansSettings,
    world: RankWorld | None = None,
    return_stats: bool = False,
):
    """Partition a geometric graph into k balanced blocks.

    Bootstraps centers from the space-filling-curve order, then runs
    movement iterations of assign-and-balance, center recomputation,
    influence erosion, and bound relaxation until centers settle or the
    budget runs out. Returns the :class:`Partition` (optionally with a
    :class:`KMeansStats`); a run that never reached the balance target
    is flagged, not hidden.
    """
    if world is None:
        world = RankWorld.from_graph(graph)
    elif world.n != graph.n:
        raise ValueError("world does not match the graph")
    return _run_pipeline(world, settings, return_stats)


def _run_pipeline(world: RankWorld, settings: KMeansSettings, return_stats: bool):
    n, d = world.n, world.dim
    k = settings.k
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points {n}")
    depth = settings.sfc_depth if settings.sfc_depth is not None else DEFAULT_DEPTH.get(d)
    if depth is None:
        raise GeometryError(f"unsupported dimension {d}")

    lo = allreduce_extreme(world, [s.points.min(axis=0) for s in world.shards], np.minimum)
    hi = allreduce_extreme(world, [s.points.max(axis=0) for s in world.shards], np.maximum)
    box = BoundingBox(lo, hi)
    keys = [hilbert_keys(s.points, box, depth) for s in world.shards]
    world = global_sort_redistribute(world, keys)

    positions = initial_center_positions(n, k)
    center_rows = []
    for r in range(world.p):
        shard = world.shards[r]
        local = positions[(positions >= shard.offset) & (positions < shard.offset + shard.size)]
        center_rows.append(shard.points[local - shard.offset])
    state = ClusterState.initial(gather_rows(world, center_rows))

    threshold = settings.delta_threshold
    if threshold is None:
        threshold = 1e-4 * box.diagonal()

    rng = np.random.default_rng(settings.seed)
    shuffled = rng.permutation(n)
    sample_rank = np.empty(n, dtype=np.int64)
    sample_rank[shuffled] = np.arange(n, dtype=np.int64)
    shard_rank = [sample_rank[s.gids] for s in world.shards]

    bounds = [PointBounds.fresh(s.size) for s in world.shards]
    assignments = [np.full(s.size, -1, dtype=np.int64) for s in world.shards]
    stats = KMeansStats()

    schedule = [("sample", size) for size in _sample_schedule(n, settings.init_sample)]
    schedule += [("full", None)] * settings.max_iter
    info = None
    fallback = None
    for step, (phase, size) in enumerate(schedule):
        active = None if size is None else [sr < size for sr in shard_rank]
        assignments, state, bounds, info = assign_and_balance(
            world, state, bounds, assignments, settings, active, stats
        )
        if phase == "full" and info.imbalance <= settings.epsilon:
            fallback = ([a.copy() for a in assignments], state, info.imbalance)
        sums, wsums = _weighted_center_partials(world, assignments, active, k)
        new_centers, totals, empty = weighted_mean_reduce(world, sums, wsums)
        new_centers[empty] = state.centers[empty]
        moves = np.linalg.norm(new_centers - state.centers, axis=1)
        stats.iterations.append(
            IterationRecord(
                phase=phase,
                active_points=n if active is None else int(sum(int(a.sum()) for a in active)),
                balance_rounds=info.rounds,
                imbalance=info.imbalance,
                skip_decisions=info.skip_decisions,
                total_decisions=info.total_decisions,
                distance_evals=info.distance_evals,
                objective=_objective(world, state, assignments, active),
                max_move=float(moves.max()),
            )
        )
        last = step == len(schedule) - 1
        converged = phase == "full" and float(moves.max()) < threshold
        if converged or last:
            stats.converged = converged
            break

        old_influence = state.influence
        new_influence = old_influence * np.where(empty, 1.0 + settings.influence_step_cap, 1.0)
        next_state = ClusterState(
            centers=new_centers,
            influence=new_influence,
            block_weights=state.block_weights,
            last_move=moves,
        )
        if settings.erosion:
            extents = _cluster_extents(world, state, assignments, active, k)
            nonempty = state.block_weights > 0
            beta = float(2.0 * extents[nonempty].mean()) if nonempty.any() else 0.0
            if beta > 0:
                next_state = erode_influence(next_state, beta)
        for r in range(world.p):
            bounds[r] = relax_bounds(
                bounds[r], assignments[r], old_influence, next_state.influence, moves
            )
        state = next_state

    final_imbalance = info.imbalance
    if final_imbalance > settings.epsilon and fallback is not None:
        # center movement between iterations can re-break a balance the
        # loop already achieved; prefer the last balanced iterate over an
        # unbalanced final one (its assignment is still the exact argmin
        # under its own snapshotted state)
        assignments, state, final_imbalance = fallback
    stats.balance_failed = final_imbalance > settings.epsilon
    stats.final_state = state
    full_assignment = np.empty(n, dtype=np.int64)
    for r in range(world.p):
        # result delivery: the driver reads shards directly, outside the
        # collective communication model
        full_assignment[world.shards[r].gids] = assignments[r]
    partition = Partition(
        assignment=full_assignment,
        k=k,
        balance_failed=stats.balance_failed,
        empty_blocks=np.flatnonzero(state.block_weights == 0),
    )
    if return_stats:
        return partition, stats
    return partition
