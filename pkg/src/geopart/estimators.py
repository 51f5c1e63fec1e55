"""Scikit-learn style wrappers around the geometric partitioners.

Each estimator takes an (n, d) coordinate matrix (d = 2 or 3) plus an
optional ``sample_weight`` and exposes the fitted block assignment as
``labels_``. They compose with the usual sklearn machinery
(``get_params``, ``set_params``, ``fit_predict``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .baselines import rcb_labels, sfc_labels
from .kmeans import KMeansSettings, balanced_kmeans_points
from .metrics import imbalance
from .validation import check_block_count, check_coords, check_sample_weight

__all__ = ["GeographerPartitioner", "RCBPartitioner", "SFCPartitioner"]


class GeographerPartitioner(ClusterMixin, BaseEstimator):
    """Balanced k-means with influence weights, bootstrapped from a
    space-filling curve.

    Parameters
    ----------
    k : number of blocks.
    epsilon : allowed imbalance; block weights may reach
        (1 + epsilon) * ceil(total / k).
    max_iter, max_balance_iter : movement / balancing round budgets.
    influence_step_cap : largest multiplicative influence change per
        balancing round.
    delta_threshold : center-movement convergence cutoff (None: 1e-4
        times the bounding-box diagonal).
    erosion : decay influences of moving centers between iterations.
    init_sample : warmup subsample size, doubling each round; 0 turns
        warmup off.
    ranks : simulated rank count; results are identical for any value.
    random_state : seed for the warmup subsample order.

    Attributes
    ----------
    labels_ : block id per point.
    cluster_centers_, influence_ : final cluster geometry.
    imbalance_, balance_failed_, n_iter_, stats_ : run diagnostics.
    """

    def __init__(
        self,
        k=8,
        epsilon=0.03,
        max_iter=50,
        max_balance_iter=20,
        influence_step_cap=0.05,
        delta_threshold=None,
        erosion=True,
        init_sample=100,
        ranks=1,
        random_state=0,
        sfc_depth=None,
        audit_bounds=False,
    ):
        self.k = k
        self.epsilon = epsilon
        self.max_iter = max_iter
        self.max_balance_iter = max_balance_iter
        self.influence_step_cap = influence_step_cap
        self.delta_threshold = delta_threshold
        self.erosion = erosion
        self.init_sample = init_sample
        self.ranks = ranks
        self.random_state = random_state
        self.sfc_depth = sfc_depth
        self.audit_bounds = audit_bounds

    def fit(self, X, y=None, sample_weight=None):
        X = check_coords(X)
        w = check_sample_weight(sample_weight, X.shape[0])
        k = check_block_count(self.k, X.shape[0])
        settings = KMeansSettings(
            k=k,
            epsilon=self.epsilon,
            max_iter=self.max_iter,
            max_balance_iter=self.max_balance_iter,
            influence_step_cap=self.influence_step_cap,
            delta_threshold=self.delta_threshold,
            erosion=self.erosion,
            init_sample=self.init_sample,
            seed=self.random_state,
            sfc_depth=self.sfc_depth,
            audit_bounds=self.audit_bounds,
        )
        partition, stats = balanced_kmeans_points(
            X, w, settings, p=self.ranks, return_stats=True
        )
        self.labels_ = partition.assignment
        self.cluster_centers_ = stats.final_state.centers
        self.influence_ = stats.final_state.influence
        self.imbalance_ = imbalance(stats.final_state.block_weights)
        self.balance_failed_ = partition.balance_failed
        self.n_iter_ = len(stats.iterations)
        self.stats_ = stats
        return self

    def predict(self, X):
        """Blocks of new points under the fitted centers and influences."""
        check_is_fitted(self, "cluster_centers_")
        X = check_coords(X)
        if X.shape[1] != self.cluster_centers_.shape[1]:
            raise ValueError("dimension differs from the fitted data")
        dist = np.linalg.norm(X[:, None, :] - self.cluster_centers_, axis=2)
        return np.argmin(dist / self.influence_, axis=1)


class RCBPartitioner(ClusterMixin, BaseEstimator):
    """Recursive coordinate bisection at weighted medians."""

    def __init__(self, k=8, epsilon=0.03):
        self.k = k
        self.epsilon = epsilon

    def fit(self, X, y=None, sample_weight=None):
        X = check_coords(X)
        w = check_sample_weight(sample_weight, X.shape[0])
        k = check_block_count(self.k, X.shape[0])
        self.labels_ = rcb_labels(X, w, k)
        bw = np.bincount(self.labels_, weights=w, minlength=k)
        self.imbalance_ = imbalance(bw)
        self.balance_failed_ = self.imbalance_ > self.epsilon
        return self


class SFCPartitioner(ClusterMixin, BaseEstimator):
    """Greedy cuts along the Hilbert curve order."""

    def __init__(self, k=8, sfc_depth=None):
        self.k = k
        self.sfc_depth = sfc_depth

    def fit(self, X, y=None, sample_weight=None):
        X = check_coords(X)
        w = check_sample_weight(sample_weight, X.shape[0])
        k = check_block_count(self.k, X.shape[0])
        self.labels_ = sfc_labels(X, w, k, self.sfc_depth)
        self.imbalance_ = imbalance(np.bincount(self.labels_, weights=w, minlength=k))
        return self
