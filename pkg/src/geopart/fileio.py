"""Readers and writers for METIS graph files, coordinate files, and partitions.

The graph format is the classic adjacency-list one: a header line
``n m [fmt [ncon]]`` followed by one line per vertex (1-based neighbor
ids), with ``%`` comment lines allowed anywhere. The ``fmt`` flags are
read right-to-left as edge weights, vertex weights, vertex sizes.
"""

from __future__ import annotations

import io
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .graph import GeometricGraph, Partition

__all__ = [
    "MetisParseError",
    "load_metis_graph",
    "write_metis_graph",
    "load_coords",
    "write_coords",
    "read_partition",
    "write_partition",
]


class MetisParseError(ValueError):
    """Raised for malformed graph, coordinate, or partition files."""


@contextmanager
def _as_text(source, mode="r"):
    """Yield a text stream for a path, text stream, or byte stream."""
    if isinstance(source, (str, Path)):
        with open(source, mode, encoding="ascii") as f:
            yield f
        return
    if isinstance(source, io.TextIOBase) or hasattr(source, "encoding"):
        yield source
        return
    if hasattr(source, "read") or hasattr(source, "write"):
        # byte stream: wrap but leave the caller's object open
        wrapper = io.TextIOWrapper(source, encoding="ascii")
        try:
            yield wrapper
            wrapper.flush()
        finally:
            wrapper.detach()
        return
    yield source


def _fail(lineno, msg):
    raise MetisParseError(f"line {lineno}: {msg}")


def _parse_positive_weight(tok, lineno, what):
    try:
        w = float(tok)
    except ValueError:
        _fail(lineno, f"non-numeric {what} {tok!r}")
    if not w > 0 or not np.isfinite(w):
        _fail(lineno, f"{what} must be strictly positive, got {tok!r}")
    return w


def load_metis_graph(graph_source, coord_source=None) -> GeometricGraph:
    """Read a METIS graph file plus a coordinate file into a graph.

    ``coord_source`` of None gives every vertex coordinate (0, 0); use
    that only for purely combinatorial work such as evaluating an
    existing partition. Raises :class:`MetisParseError` naming the
    offending line for malformed headers, non-numeric tokens, ids out
    of range, line-count mismatches, and asymmetric adjacency.
    """
    with _as_text(graph_source) as f:
        lines = f.read().splitlines()

    header = None
    header_no = 0
    body = []  # (lineno, text)
    for no, line in enumerate(lines, start=1):
        if line.lstrip().startswith("%"):
            continue
        if header is None:
            header = line
            header_no = no
        else:
            body.append((no, line))

    if header is None:
        raise MetisParseError("line 1: missing header")
    parts = header.split()
    if len(parts) < 2 or len(parts) > 4:
        _fail(header_no, f"header must be 'n m [fmt [ncon]]', got {header!r}")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        _fail(header_no, "non-numeric vertex or edge count")
    if n < 1 or m < 0:
        _fail(header_no, f"bad sizes n={n} m={m}")
    fmt = parts[2] if len(parts) >= 3 else "0"
    if not fmt.isdigit():
        _fail(header_no, f"non-numeric fmt {fmt!r}")
    fmt = fmt.zfill(3)
    has_vsize, has_vwgt, has_ewgt = (c == "1" for c in fmt)
    if has_vsize:
        _fail(header_no, "vertex sizes (fmt 1xx) are not supported")
    ncon = 1
    if len(parts) == 4:
        try:
            ncon = int(parts[3])
        except ValueError:
            _fail(header_no, f"non-numeric ncon {parts[3]!r}")
    if has_vwgt and ncon != 1:
        _fail(header_no, f"only one vertex weight per vertex is supported, got ncon={ncon}")

    # ignore trailing all-whitespace lines beyond the declared vertex count
    while len(body) > n and not body[-1][1].strip():
        body.pop()
    if len(body) != n:
        raise MetisParseError(
            f"line {header_no}: header declares {n} vertices but file has {len(body)} vertex lines"
        )

    vwgt = np.ones(n, dtype=np.float64)
    degs = np.zeros(n, dtype=np.int64)
    nbr_chunks = []
    ewgt_chunks = [] if has_ewgt else None
    for u, (no, line) in enumerate(body):
        toks = line.split()
        pos = 0
        if has_vwgt:
            if not toks:
                _fail(no, "missing vertex weight")
            vwgt[u] = _parse_positive_weight(toks[0], no, "vertex weight")
            pos = 1
        rest = toks[pos:]
        if has_ewgt:
            if len(rest) % 2:
                _fail(no, "dangling neighbor without edge weight")
            ids = rest[0::2]
            ews = rest[1::2]
        else:
            ids = rest
            ews = None
        nbrs = np.empty(len(ids), dtype=np.int64)
        for j, tok in enumerate(ids):
            try:
                v = int(tok)
            except ValueError:
                _fail(no, f"non-numeric neighbor id {tok!r}")
            if v < 1 or v > n:
                _fail(no, f"neighbor id {v} out of range 1..{n}")
            if v == u + 1:
                _fail(no, f"self loop at vertex {u + 1}")
            nbrs[j] = v - 1
        if len(set(nbrs.tolist())) != len(nbrs):
            _fail(no, f"duplicate neighbor in adjacency list of vertex {u + 1}")
        degs[u] = len(nbrs)
        nbr_chunks.append(nbrs)
        if has_ewgt:
            ewgt_chunks.append(
                np.array([_parse_positive_weight(t, no, "edge weight") for t in ews])
            )

    neighbors = np.concatenate(nbr_chunks) if nbr_chunks else np.empty(0, dtype=np.int64)
    if neighbors.size != 2 * m:
        raise MetisParseError(
            f"line {header_no}: header declares {m} edges but adjacency lists "
            f"hold {neighbors.size} entries (expected {2 * m})"
        )
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degs, out=offsets[1:])
    eweights = np.concatenate(ewgt_chunks) if has_ewgt and ewgt_chunks else None
    if has_ewgt and eweights is None:
        eweights = np.empty(0, dtype=np.float64)

    src = np.repeat(np.arange(n, dtype=np.int64), degs)
    fwd = src * n + neighbors
    rev = neighbors * n + src
    fo, ro = np.argsort(fwd, kind="stable"), np.argsort(rev, kind="stable")
    if not np.array_equal(fwd[fo], rev[ro]):
        missing = np.setdiff1d(fwd, rev)
        u, v = divmod(int(missing[0]), n) if missing.size else divmod(int(fwd[fo][0]), n)
        raise MetisParseError(
            f"asymmetric adjacency: vertex {u + 1} lists {v + 1} but not vice versa"
        )
    if eweights is not None and not np.array_equal(eweights[fo], eweights[ro]):
        raise MetisParseError("edge weight differs between the two directions of an edge")

    if coord_source is None:
        coords = np.zeros((n, 2), dtype=np.float64)
    else:
        coords = load_coords(coord_source, expect_n=n)
    g = GeometricGraph(offsets, neighbors, coords, vwgt, eweights)
    g.validate()
    return g


def write_metis_graph(graph: GeometricGraph, sink) -> None:
    """Write the adjacency part of a graph in METIS format."""
    has_vwgt = not np.all(graph.vertex_weights == 1.0)
    has_ewgt = graph.edge_weights is not None
    fmt = f"{int(has_vwgt)}{int(has_ewgt)}"
    with _as_text(sink, "w") as f:
        header = f"{graph.n} {graph.m}"
        if has_vwgt or has_ewgt:
            header += f" 0{fmt}"
        f.write(header + "\n")
        for u in range(graph.n):
            toks = []
            if has_vwgt:
                toks.append(_num_token(graph.vertex_weights[u]))
            lo, hi = graph.offsets[u], graph.offsets[u + 1]
            for j in range(lo, hi):
                toks.append(str(int(graph.neighbors[j]) + 1))
                if has_ewgt:
                    toks.append(_num_token(graph.edge_weights[j]))
            f.write(" ".join(toks) + "\n")


def _num_token(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def load_coords(source, expect_n: int | None = None) -> np.ndarray:
    """Read a coordinate file: one line per vertex, 2 or 3 reals each."""
    with _as_text(source) as f:
        try:
            coords = np.loadtxt(f, dtype=np.float64, ndmin=2)
        except ValueError as e:
            raise MetisParseError(f"malformed coordinate file: {e}") from None
    if coords.size == 0:
        raise MetisParseError("empty coordinate file")
    if coords.shape[1] not in (2, 3):
        raise MetisParseError(f"coordinates must have 2 or 3 columns, got {coords.shape[1]}")
    if expect_n is not None and coords.shape[0] != expect_n:
        raise MetisParseError(
            f"coordinate file has {coords.shape[0]} lines, expected {expect_n}"
        )
    if not np.isfinite(coords).all():
        raise MetisParseError("non-finite coordinate")
    return coords


def write_coords(coords: np.ndarray, sink) -> None:
    """Write coordinates, one vertex per line, full float64 precision."""
    with _as_text(sink, "w") as f:
        np.savetxt(f, np.asarray(coords, dtype=np.float64), fmt="%.17g")


def read_partition(source, expect_n: int | None = None, k: int | None = None) -> Partition:
    """Read a partition file: one block id per line."""
    with _as_text(source) as f:
        try:
            a = np.loadtxt(f, dtype=np.int64, ndmin=1)
        except ValueError as e:
            raise MetisParseError(f"malformed partition file: {e}") from None
    if a.ndim != 1:
        raise MetisParseError("partition file must hold one block id per line")
    if expect_n is not None and a.shape[0] != expect_n:
        raise MetisParseError(f"partition file has {a.shape[0]} lines, expected {expect_n}")
    if a.size and a.min() < 0:
        raise MetisParseError("negative block id")
    if k is None:
        k = int(a.max()) + 1 if a.size else 1
    return Partition(assignment=a, k=k)


def write_partition(partition: Partition | np.ndarray, sink) -> None:
    """Write a partition as one decimal block id per line."""
    a = partition.assignment if isinstance(partition, Partition) else np.asarray(partition)
    with _as_text(sink, "w") as f:
        f.write("\n".join(str(int(x)) for x in a) + "\n")
