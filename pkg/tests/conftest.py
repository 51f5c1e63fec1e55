import numpy as np
import pytest

from geopart.graph import GeometricGraph


@pytest.fixture
def path4():
    """Path 0-1-2-3 on a line."""
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    return GeometricGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)], coords)


def brute_force_labels(points, centers, influence):
    """Reference weighted-Voronoi assignment: argmin of dist/influence,
    first (lowest) index on ties."""
    dist = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
    return np.argmin(dist / influence[None, :], axis=1)


def random_connected_graph(rng, n, extra_edges):
    """Random tree plus extra random edges; always connected."""
    edges = set()
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.add((u, v))
    want = min(n - 1 + extra_edges, n * (n - 1) // 2)
    while len(edges) < want:
        u, v = rng.integers(0, n, size=2)
        u, v = int(min(u, v)), int(max(u, v))
        if u != v:
            edges.add((u, v))
    coords = rng.random((n, 2))
    return GeometricGraph.from_edges(n, sorted(edges), coords)
