"""DBSCAN over latent embeddings plus per-cluster term summaries.

Plain O(N^2) Euclidean DBSCAN with a closed eps-ball (a point counts its own
neighborhood member), which is all these corpus sizes need. Cluster ids follow
discovery order, so labels are deterministic for a fixed input order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import Vocabulary
from .validation import as_float_matrix

NOISE = -1
_UNVISITED = -2


def _pairwise_sq_dists(points: np.ndarray) -> np.ndarray:
    sq = (points**2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


@dataclass(frozen=True)
class ClusterLabels:
    """Per-point labels; -1 is noise, clusters are numbered by discovery."""

    labels: np.ndarray
    eps: float
    min_pts: int

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max() + 1) if self.labels.size else 0


def dbscan(points, eps: float, min_pts: int) -> ClusterLabels:
    """Label points with standard DBSCAN.

    A point is core iff its closed eps-ball holds at least min_pts points
    (itself included). Border points keep the first cluster that reaches
    them in scan order.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return ClusterLabels(np.empty(0, dtype=np.int64), eps, min_pts)
    pts = as_float_matrix(pts, "points")

    d2 = _pairwise_sq_dists(pts)
    eps2 = eps * eps
    neighbors = [np.flatnonzero(row <= eps2) for row in d2]

    n = pts.shape[0]
    labels = np.full(n, _UNVISITED, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] != _UNVISITED:
            continue
        if neighbors[i].size < min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cluster
        queue = deque(int(j) for j in neighbors[i])
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cluster  # noise becomes a border point
            if labels[j] != _UNVISITED:
                continue
            labels[j] = cluster
            if neighbors[j].size >= min_pts:
                queue.extend(int(m) for m in neighbors[j])
        cluster += 1
    return ClusterLabels(labels, eps, min_pts)


def auto_eps(points, min_pts: int, percentile: float = 95.0) -> float:
    """Heuristic eps: percentile of each point's min_pts-th nearest distance
    (self included, matching the closed-ball core test)."""
    pts = as_float_matrix(np.asarray(points, dtype=np.float64), "points")
    n = pts.shape[0]
    if n == 0:
        raise ValueError("cannot pick eps for an empty point set")
    d = np.sqrt(_pairwise_sq_dists(pts))
    d.sort(axis=1)
    kth = d[:, min(min_pts, n) - 1]
    kth_sorted = np.sort(kth)
    rank = max(int(np.ceil(percentile / 100.0 * n)), 1)
    eps = float(kth_sorted[rank - 1])
    if eps <= 0.0:
        positive = d[d > 0]
        eps = float(positive.min()) if positive.size else 1e-12
    return eps


def cluster_top_terms(
    labels: ClusterLabels,
    vectors,
    vocab: Vocabulary,
    top_n: int,
) -> dict[int, list[str]]:
    """Top terms per cluster by summed count, ties lexicographic ascending.

    The noise set (label -1) is reported under its own key when present.
    """
    vectors = list(vectors)
    if len(vectors) != labels.labels.size:
        raise ValueError("labels and vectors are not aligned")
    totals: dict[int, dict[int, int]] = {}
    for label, cv in zip(labels.labels, vectors):
        bucket = totals.setdefault(int(label), {})
        for pos, cnt in cv.counts.items():
            bucket[pos] = bucket.get(pos, 0) + cnt
    out: dict[int, list[str]] = {}
    for label in sorted(totals):
        ranked = sorted(
            totals[label].items(), key=lambda item: (-item[1], vocab.terms[item[0]])
        )
        out[label] = [vocab.terms[pos] for pos, _ in ranked[:top_n]]
    return out


class DBSCAN(BaseEstimator):
    """Estimator wrapper: fit stores labels_, eps_ and n_clusters_.

    eps="auto" resolves via the nearest-neighbor distance heuristic at fit
    time.
    """

    def __init__(self, eps: float | str = "auto", min_pts: int = 4):
        self.eps = eps
        self.min_pts = min_pts

    def fit(self, X, y=None):
        pts = as_float_matrix(np.asarray(X, dtype=np.float64), "X")
        eps = auto_eps(pts, self.min_pts) if self.eps == "auto" else float(self.eps)
        result = dbscan(pts, eps, self.min_pts)
        self.eps_ = eps
        self.labels_ = result.labels
        self.n_clusters_ = result.n_clusters
        return self

    def fit_predict(self, X, y=None) -> np.ndarray:
        self.fit(X)
        return self.labels_
