"""Partition quality metrics: cut, communication volume, balance, diameters."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .graph import GeometricGraph, GraphError, Partition

__all__ = [
    "balance_target",
    "imbalance",
    "edge_cut",
    "comm_volumes",
    "block_diameter_lower_bounds",
    "geometric_mean",
    "harmonic_mean_diameters",
    "MetricsReport",
    "evaluate",
]


def balance_target(total_weight: float, k: int) -> float:
    """Largest allowed block weight before the (1 + eps) factor: ceil(total / k)."""
    if float(total_weight).is_integer():
        return float(-(-int(total_weight) // k))
    return float(math.ceil(total_weight / k))


def imbalance(block_weights) -> float:
    """max block weight / ceil(total / k) - 1; 0 means perfectly balanced."""
    bw = np.asarray(block_weights, dtype=np.float64)
    k = bw.shape[0]
    total = float(bw.sum())
    if total <= 0:
        raise GraphError("total weight must be positive")
    return float(bw.max() / balance_target(total, k) - 1.0)


def _directed_edges(graph: GeometricGraph):
    src = np.repeat(np.arange(graph.n, dtype=np.int64), graph.degrees())
    return src, graph.neighbors


def edge_cut(graph: GeometricGraph, partition: Partition) -> float:
    """Total weight of edges whose endpoints lie in different blocks.

    Each undirected edge is counted once; unweighted edges count 1.
    """
    partition.validate(graph.n)
    src, dst = _directed_edges(graph)
    a = partition.assignment
    mask = (a[src] != a[dst]) & (src < dst)
    if graph.edge_weights is None:
        return float(np.count_nonzero(mask))
    return float(graph.edge_weights[mask].sum())


def comm_volumes(graph: GeometricGraph, partition: Partition):
    """Communication volume per block and its (max, total) summary.

    A vertex contributes, to its own block's volume, the number of
    *other* blocks among its neighbors. Returns
    ``(max_volume, total_volume, per_block)``.
    """
    partition.validate(graph.n)
    a = partition.assignment
    k = partition.k
    src, dst = _directed_edges(graph)
    mask = a[dst] != a[src]
    pair_keys = np.unique(src[mask] * np.int64(k) + a[dst][mask])
    owners = pair_keys // k
    per_block = np.bincount(a[owners], minlength=k).astype(np.float64)
    return float(per_block.max()), float(per_block.sum()), per_block


def _ragged_take(offsets, neighbors, frontier):
    counts = offsets[frontier + 1] - offsets[frontier]
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=neighbors.dtype)
    ends = np.cumsum(counts)
    idx = np.arange(total, dtype=np.int64) - np.repeat(ends - counts, counts)
    idx += np.repeat(offsets[frontier], counts)
    return neighbors[idx]


def _bfs_levels(offsets, neighbors, source, n):
    level = np.full(n, -1, dtype=np.int64)
    level[source] = 0
    frontier = np.array([source], dtype=np.int64)
    d = 0
    while frontier.size:
        d += 1
        cand = _ragged_take(offsets, neighbors, frontier)
        cand = cand[level[cand] < 0]
        if cand.size == 0:
            break
        frontier = np.unique(cand)
        level[frontier] = d
    return level


def _induced_csr(graph: GeometricGraph, members: np.ndarray):
    remap = np.full(graph.n, -1, dtype=np.int64)
    remap[members] = np.arange(members.size, dtype=np.int64)
    src, dst = _directed_edges(graph)
    keep = (remap[src] >= 0) & (remap[dst] >= 0)
    s, t = remap[src[keep]], remap[dst[keep]]
    order = np.lexsort((t, s))
    s, t = s[order], t[order]
    offsets = np.zeros(members.size + 1, dtype=np.int64)
    np.add.at(offsets, s + 1, 1)
    np.cumsum(offsets, out=offsets)
    return offsets, t


def _farthest(level):
    top = level.max()
    return int(np.flatnonzero(level == top)[0]), int(top)


def block_diameter_lower_bounds(
    graph: GeometricGraph, partition: Partition, refinement_rounds: int = 3
) -> np.ndarray:
    """Per-block diameter lower bounds in hop distance.

    Double sweep (BFS from the lowest-id vertex, then from the farthest
    vertex found) followed by up to ``refinement_rounds`` extra BFS
    passes rooted at the deepest fringe of the second sweep. Every value
    is an eccentricity, so it never exceeds the true diameter; a
    disconnected block gets inf (unbounded).
    """
    partition.validate(graph.n)
    out = np.zeros(partition.k, dtype=np.float64)
    for b in range(partition.k):
        members = np.flatnonzero(partition.assignment == b)
        if members.size == 0:
            out[b] = np.inf
            continue
        if members.size == 1:
            out[b] = 0.0
            continue
        offsets, nbrs = _induced_csr(graph, members)
        nb = members.size
        lev0 = _bfs_levels(offsets, nbrs, 0, nb)
        if (lev0 < 0).any():
            out[b] = np.inf
            continue
        a, _ = _farthest(lev0)
        lev_a = _bfs_levels(offsets, nbrs, a, nb)
        _, best = _farthest(lev_a)
        # fringe refinement: deepest vertices of the second sweep, low id first
        fringe = np.lexsort((np.arange(nb), -lev_a))
        added = 0
        for root in fringe:
            if added >= refinement_rounds:
                break
            root = int(root)
            if root == a:
                continue
            added += 1
            _, ecc = _farthest(_bfs_levels(offsets, nbrs, root, nb))
            best = max(best, ecc)
        out[b] = float(best)
    return out


def geometric_mean(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0 or not (v > 0).all():
        raise ValueError("geometric mean needs positive values")
    return float(np.exp(np.mean(np.log(v))))


def harmonic_mean_diameters(values) -> float:
    """Harmonic mean where unbounded (inf) entries contribute 0 reciprocal."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0 or (v < 0).any():
        raise ValueError("harmonic mean needs nonnegative values")
    with np.errstate(divide="ignore"):
        recip = np.where(np.isinf(v), 0.0, np.divide(1.0, v))
    denom = recip.sum()
    if denom == 0.0:
        return math.inf
    return float(v.size / denom)


@dataclass
class MetricsReport:
    """Quality summary of one partition of one graph."""

    n: int
    m: int
    k: int
    edge_cut: float
    comm_max: float
    comm_total: float
    imbalance: float
    harmonic_diameter: float
    block_weights: list
    block_comm: list
    block_diameters: list

    def to_text(self) -> str:
        lines = [
            f"vertices: {self.n}",
            f"edges: {self.m}",
            f"blocks: {self.k}",
            f"edge_cut: {_fmt(self.edge_cut)}",
            f"comm_max: {_fmt(self.comm_max)}",
            f"comm_total: {_fmt(self.comm_total)}",
            f"imbalance: {_fmt(self.imbalance)}",
            f"harmonic_diameter: {_fmt(self.harmonic_diameter)}",
        ]
        for i in range(self.k):
            lines.append(
                f"block {i}: weight {_fmt(self.block_weights[i])} "
                f"comm {_fmt(self.block_comm[i])} "
                f"diameter {_fmt(self.block_diameters[i])}"
            )
        return "\n".join(lines)

    def to_json(self) -> str:
        d = asdict(self)
        for key in ("harmonic_diameter",):
            d[key] = _json_num(d[key])
        d["block_diameters"] = [_json_num(x) for x in d["block_diameters"]]
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        d = json.loads(text)
        d["harmonic_diameter"] = _unjson_num(d["harmonic_diameter"])
        d["block_diameters"] = [_unjson_num(x) for x in d["block_diameters"]]
        return cls(**d)


def _fmt(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "unbounded"
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x)


def _json_num(x):
    return "unbounded" if isinstance(x, float) and math.isinf(x) else x


def _unjson_num(x):
    return math.inf if x == "unbounded" else float(x)


def evaluate(graph: GeometricGraph, partition: Partition, diameters: bool = True) -> MetricsReport:
    """Compute the full metrics report for one (graph, partition) pair."""
    partition.validate(graph.n)
    bw = partition.block_weights(graph.vertex_weights)
    cmax, ctot, per_block = comm_volumes(graph, partition)
    if diameters:
        dia = block_diameter_lower_bounds(graph, partition)
        harm = harmonic_mean_diameters(dia)
    else:
        dia = np.full(partition.k, np.nan)
        harm = math.nan
    return MetricsReport(
        n=graph.n,
        m=graph.m,
        k=partition.k,
        edge_cut=edge_cut(graph, partition),
        comm_max=cmax,
        comm_total=ctot,
        imbalance=imbalance(bw),
        harmonic_diameter=harm,
        block_weights=[float(x) for x in bw],
        block_comm=[float(x) for x in per_block],
        block_diameters=[float(x) for x in dia],
    )
