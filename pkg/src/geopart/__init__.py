"""Geometric mesh partitioning.

Balanced k-means over multiplicatively weighted Voronoi cells,
bootstrapped from a Hilbert curve and driven over simulated distributed
ranks, next to recursive-bisection and curve-cut baselines and a graph
metrics toolkit.
"""

from .baselines import rcb_partition, sfc_partition
from .estimators import GeographerPartitioner, RCBPartitioner, SFCPartitioner
from .fileio import (
    MetisParseError,
    load_coords,
    load_metis_graph,
    read_partition,
    write_coords,
    write_metis_graph,
    write_partition,
)
from .generators import generate_grid_mesh, generate_random_geometric
from .geometry import BoundingBox, GeometryError, SfcKey, hilbert_key, hilbert_keys
from .graph import GeometricGraph, GraphError, Partition
from .kmeans import KMeansSettings, balanced_kmeans, balanced_kmeans_points
from .metrics import MetricsReport, evaluate
from .ranksim import RankWorld

__version__ = "0.1.0"

__all__ = [
    "GeographerPartitioner",
    "RCBPartitioner",
    "SFCPartitioner",
    "GeometricGraph",
    "Partition",
    "KMeansSettings",
    "balanced_kmeans",
    "balanced_kmeans_points",
    "rcb_partition",
    "sfc_partition",
    "evaluate",
    "MetricsReport",
    "RankWorld",
    "BoundingBox",
    "SfcKey",
    "hilbert_key",
    "hilbert_keys",
    "generate_random_geometric",
    "generate_grid_mesh",
    "load_metis_graph",
    "load_coords",
    "read_partition",
    "write_metis_graph",
    "write_coords",
    "write_partition",
    "GeometryError",
    "GraphError",
    "MetisParseError",
]
