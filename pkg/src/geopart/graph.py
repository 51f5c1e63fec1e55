"""Vertex-weighted geometric graphs in CSR form, and partitions of them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["GraphError", "GeometricGraph", "Partition"]


class GraphError(ValueError):
    """Raised for structurally invalid graphs or partitions."""


@dataclass
class GeometricGraph:
    """Undirected graph with per-vertex coordinates and weights.

    Adjacency is stored in CSR form; every undirected edge appears twice
    in ``neighbors``. ``edge_weights`` is aligned with ``neighbors`` and
    may be None for an unweighted graph.
    """

    offsets: np.ndarray
    neighbors: np.ndarray
    coords: np.ndarray
    vertex_weights: np.ndarray
    edge_weights: np.ndarray | None = None

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.int64)
        self.neighbors = np.asarray(self.neighbors, dtype=np.int64)
        self.coords = np.asarray(self.coords, dtype=np.float64)
        self.vertex_weights = np.asarray(self.vertex_weights, dtype=np.float64)
        if self.edge_weights is not None:
            self.edge_weights = np.asarray(self.edge_weights, dtype=np.float64)

    @property
    def n(self) -> int:
        return self.offsets.shape[0] - 1

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return self.neighbors.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v] : self.offsets[v + 1]]

    @classmethod
    def from_edges(cls, n, edges, coords, vertex_weights=None, edge_weights=None):
        """Build CSR adjacency from an iterable of undirected (u, v) pairs.

        Each pair must appear once; both directions are generated here.
        Neighbor lists come out sorted by vertex id.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        coords = np.asarray(coords, dtype=np.float64)
        u = np.concatenate([edges[:, 0], edges[:, 1]])
        v = np.concatenate([edges[:, 1], edges[:, 0]])
        w = None
        if edge_weights is not None:
            ew = np.asarray(edge_weights, dtype=np.float64)
            w = np.concatenate([ew, ew])
        order = np.lexsort((v, u))
        u, v = u[order], v[order]
        if w is not None:
            w = w[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, u + 1, 1)
        np.cumsum(offsets, out=offsets)
        if vertex_weights is None:
            vertex_weights = np.ones(n, dtype=np.float64)
        g = cls(offsets, v, coords, vertex_weights, w)
        g.validate()
        return g

    def validate(self):
        """Check structural invariants; raises :class:`GraphError`."""
        n = self.n
        if n < 1:
            raise GraphError("graph must have at least one vertex")
        if self.offsets[0] != 0 or self.offsets[-1] != self.neighbors.shape[0]:
            raise GraphError("CSR offsets do not bracket the neighbor array")
        if (np.diff(self.offsets) < 0).any():
            raise GraphError("CSR offsets not nondecreasing")
        if self.coords.ndim != 2 or self.coords.shape[0] != n:
            raise GraphError("coords must be an (n, d) array")
        if self.coords.shape[1] not in (2, 3):
            raise GraphError(f"unsupported dimension {self.coords.shape[1]}")
        if not np.isfinite(self.coords).all():
            raise GraphError("non-finite coordinate")
        if self.vertex_weights.shape != (n,):
            raise GraphError("vertex_weights must have one entry per vertex")
        if not (self.vertex_weights > 0).all():
            raise GraphError("vertex weights must be strictly positive")
        nbrs = self.neighbors
        if nbrs.size:
            if nbrs.min() < 0 or nbrs.max() >= n:
                raise GraphError("neighbor id out of range")
        src = np.repeat(np.arange(n, dtype=np.int64), self.degrees())
        if (src == nbrs).any():
            raise GraphError("self loop")
        fwd = src * n + nbrs
        if np.unique(fwd).size != fwd.size:
            raise GraphError("parallel edge")
        rev = nbrs * n + src
        fo, ro = np.argsort(fwd), np.argsort(rev)
        if not np.array_equal(fwd[fo], rev[ro]):
            raise GraphError("adjacency is not symmetric")
        if self.edge_weights is not None:
            if self.edge_weights.shape != nbrs.shape:
                raise GraphError("edge_weights must align with neighbors")
            if not (self.edge_weights > 0).all():
                raise GraphError("edge weights must be strictly positive")
            if not np.array_equal(self.edge_weights[fo], self.edge_weights[ro]):
                raise GraphError("edge weight differs between the two directions")

    def total_weight(self) -> float:
        return float(self.vertex_weights.sum())


@dataclass
class Partition:
    """Assignment of each vertex to one of ``k`` blocks.

    ``balance_failed`` marks a partitioner run that exhausted its budget
    with the balance constraint still violated; the assignment is still
    the best one found.
    """

    assignment: np.ndarray
    k: int
    balance_failed: bool = False
    empty_blocks: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        self.empty_blocks = np.asarray(self.empty_blocks, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.assignment.shape[0]

    def validate(self, n: int | None = None):
        if self.k < 1:
            raise GraphError("k must be >= 1")
        if n is not None and self.assignment.shape[0] != n:
            raise GraphError("partition length does not match vertex count")
        if self.assignment.size == 0:
            raise GraphError("empty partition")
        if self.assignment.min() < 0 or self.assignment.max() >= self.k:
            raise GraphError("block id out of range")

    def block_weights(self, vertex_weights=None) -> np.ndarray:
        if vertex_weights is None:
            vertex_weights = np.ones(self.n)
        return np.bincount(self.assignment, weights=vertex_weights, minlength=self.k)
