"""K-means with an explicit garbage cluster for isolated points.

A point with no neighbour within ``mu_radius`` cannot be a duplicate of
anything, so it is routed to the garbage set before clustering; the rest are
split into k clusters minimizing the usual within-cluster squared distance.
Tiny instances are solved exactly by enumerating assignments; larger ones use
Lloyd iterations with k-means++ seeding and many restarts.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Clustering",
    "ClusteringError",
    "brute_force_kmeans",
    "kmeans_cost",
    "lloyd_kmeans",
    "neighbour_mask",
    "regularized_kmeans",
]


def neighbour_mask(points: np.ndarray, mu_radius: float) -> np.ndarray:
    """Boolean mask of points with another point within ``mu_radius``.

    The complement is the garbage set of ``regularized_kmeans``.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ClusteringError("points must be an (n, d) array")
    if mu_radius < 0:
        raise ClusteringError("mu_radius must be non-negative")
    if len(points) == 0:
        return np.zeros(0, dtype=bool)
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    return d2.min(axis=1) <= mu_radius**2


class ClusteringError(ValueError):
    """Infeasible clustering request (e.g. more clusters than points)."""


@dataclass(frozen=True)
class Clustering:
    """Clusters plus garbage over point indices 0..n-1 of one instance.

    Garbage members behave as singleton clusters: the pair relation is
    "same non-garbage cluster", and ``labels`` gives garbage points unique
    negative ids so relabeling-invariant comparisons stay simple.
    """

    clusters: tuple[np.ndarray, ...]
    garbage: np.ndarray
    n: int

    def __post_init__(self) -> None:
        nonempty = [p for p in (*self.clusters, self.garbage) if p.size]
        allidx = np.concatenate(nonempty) if nonempty else np.empty(0, dtype=np.int64)
        if allidx.size != self.n or np.unique(allidx).size != self.n:
            raise ClusteringError("clusters plus garbage must partition the points")
        if any(c.size == 0 for c in self.clusters):
            raise ClusteringError("empty cluster")

    @property
    def k(self) -> int:
        return len(self.clusters)

    @property
    def labels(self) -> np.ndarray:
        lab = np.empty(self.n, dtype=np.int64)
        for ci, members in enumerate(self.clusters):
            lab[members] = ci
        for gi, idx in enumerate(self.garbage):
            lab[idx] = -(gi + 1)
        return lab

    def same_cluster(self, i: int, j: int) -> bool:
        lab = self.labels
        return bool(lab[i] == lab[j] and lab[i] >= 0) or i == j


def kmeans_cost(points: np.ndarray, labels: np.ndarray) -> float:
    """Sum of squared distances to the assigned cluster centroids."""
    cost = 0.0
    for lab in np.unique(labels):
        sub = points[labels == lab]
        cost += float(((sub - sub.mean(axis=0)) ** 2).sum())
    return cost


@lru_cache(maxsize=64)
def _assignments(n: int, k: int) -> np.ndarray:
    """All canonical assignments of n points into at most k clusters.

    Rows are restricted growth strings: point 0 is in cluster 0 and each
    point may open at most one new cluster, so every set partition appears
    exactly once.
    """
    rows: list[list[int]] = []

    def grow(prefix: list[int], used: int) -> None:
        if len(prefix) == n:
            rows.append(prefix.copy())
            return
        for lab in range(min(used + 1, k)):
            prefix.append(lab)
            grow(prefix, max(used, lab + 1))
            prefix.pop()

    grow([], 0)
    return np.array(rows, dtype=np.int64)


def brute_force_kmeans(points: np.ndarray, k: int) -> np.ndarray:
    """Globally optimal labels by enumerating every partition into <= k sets."""
    n = len(points)
    if n == 0 or k < 1:
        raise ClusteringError("brute force needs points and k >= 1")
    assign = _assignments(n, k)
    onehot = np.eye(k)[assign]                       # (P, n, k)
    counts = onehot.sum(axis=1)                      # (P, k)
    sums = np.einsum("pnk,nd->pkd", onehot, points)  # (P, k, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = (sums**2).sum(axis=2) / counts
    sq = np.nan_to_num(sq)
    total = float((points**2).sum())
    costs = total - sq.sum(axis=1)
    return assign[int(np.argmin(costs))]


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        probs = d2 / d2.sum() if d2.sum() > 0 else np.full(n, 1.0 / n)
        centers[j] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, ((points - centers[j]) ** 2).sum(axis=1))
    return centers


def lloyd_kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    restarts: int = 32,
    max_iter: int = 100,
) -> np.ndarray:
    """Best labels over ``restarts`` k-means++ seeded Lloyd runs."""
    n = len(points)
    if k > n:
        raise ClusteringError(f"k={k} exceeds point count {n}")
    rng = np.random.default_rng(seed)
    best_labels = None
    best_cost = np.inf
    for _ in range(restarts):
        centers = _kmeanspp_init(points, k, rng)
        labels = np.zeros(n, dtype=np.int64)
        for _ in range(max_iter):
            d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = d2.argmin(axis=1)
            for j in range(k):
                members = points[new_labels == j]
                if len(members):
                    centers[j] = members.mean(axis=0)
                else:
                    # re-seed an empty cluster on the farthest point
                    far = int(d2.min(axis=1).argmax())
                    centers[j] = points[far]
                    new_labels[far] = j
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        cost = kmeans_cost(points, labels)
        if cost < best_cost:
            best_cost, best_labels = cost, labels.copy()
    return best_labels


def regularized_kmeans(
    points: np.ndarray,
    k: int,
    mu_radius: float,
    seed: int = 0,
    brute_force_cap: int = 9,
    restarts: int = 32,
) -> Clustering:
    """Cluster an instance into k groups plus a garbage set.

    Points whose nearest neighbour is farther than ``mu_radius`` go to
    garbage; the remaining points are k-clustered (exactly when at most
    ``brute_force_cap`` remain, by restarted Lloyd otherwise).  ``k`` may be
    zero only when the prefilter removes everything.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    has_neighbour = neighbour_mask(points, mu_radius)
    if n == 0:
        return Clustering(clusters=(), garbage=np.empty(0, dtype=np.int64), n=0)
    keep = np.flatnonzero(has_neighbour)
    garbage = np.flatnonzero(~has_neighbour)
    if keep.size == 0:
        if k != 0:
            raise ClusteringError(
                f"k={k} requested but the prefilter left no points to cluster"
            )
        return Clustering(clusters=(), garbage=garbage, n=n)
    if k < 1:
        raise ClusteringError("k must be >= 1 when clusterable points remain")
    if k > keep.size:
        raise ClusteringError(f"k={k} exceeds remaining point count {keep.size}")
    sub = points[keep]
    if keep.size <= brute_force_cap:
        labels = brute_force_kmeans(sub, k)
    else:
        labels = lloyd_kmeans(sub, k, seed=seed, restarts=restarts)
    clusters = tuple(
        keep[labels == lab] for lab in range(labels.max() + 1) if (labels == lab).any()
    )
    return Clustering(clusters=clusters, garbage=garbage, n=n)
