"""Mini-batch k-means, inverse-distance memberships, silhouette, K sweep."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from pglee import kernels

_DIST_EPS = 1e-12


class ClusteringError(ValueError):
    pass


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, d)
    counts: np.ndarray  # per-centroid update counts
    assignments: np.ndarray  # point index -> cluster index (fit data)
    role: str = ""
    inertia_history: list[float] = field(default_factory=list)

    def save(self, path) -> None:
        payload = {
            "role": self.role,
            "k": self.k,
            "centroids": self.centroids.tolist(),
            "counts": self.counts.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path) -> "ClusterModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        centroids = np.array(payload["centroids"], dtype=np.float64)
        return cls(
            payload["k"],
            centroids,
            np.array(payload["counts"], dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            payload.get("role", ""),
        )


@dataclass
class SweepResult:
    candidates: list[tuple[int, float]]
    best_k: int


def _kmeans_pp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++ seeding: first center uniform; each later center is
    the best of 2 + floor(log k) D^2-weighted draws (the candidate that
    minimizes the resulting potential)."""
    n = points.shape[0]
    n_candidates = 2 + int(math.log(k)) if k > 1 else 1
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    sqd = kernels.pairwise_sqdist(points, centers[:1])[:, 0]
    for c in range(1, k):
        total = sqd.sum()
        if total <= 0:
            centers[c] = points[rng.integers(n)]
            continue
        cumulative = np.cumsum(sqd)
        draws = rng.random(n_candidates) * total
        candidates = np.minimum(np.searchsorted(cumulative, draws), n - 1)
        best_idx, best_sqd, best_potential = -1, None, np.inf
        for idx in candidates:
            cand_sqd = np.minimum(
                sqd, kernels.pairwise_sqdist(points, points[idx : idx + 1])[:, 0]
            )
            potential = cand_sqd.sum()
            if potential < best_potential:
                best_idx, best_sqd, best_potential = int(idx), cand_sqd, potential
        centers[c] = points[best_idx]
        sqd = best_sqd
    return centers


def inertia(points: np.ndarray, centroids: np.ndarray) -> float:
    sqd = kernels.pairwise_sqdist(points, centroids)
    return float(sqd.min(axis=1).sum())


def minibatch_kmeans(points: np.ndarray, k: int, iterations: int = 10,
                     batch: int = 256, seed: int = 0,
                     track_inertia: bool = False) -> ClusterModel:
    """Sculley-style mini-batch k-means with per-centroid 1/count rates.

    With batch >= #points every iteration is a damped Lloyd step, so the
    full-assignment inertia is non-increasing across iterations.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < k:
        raise ClusteringError(f"need at least k={k} points, got {n}")
    if iterations < 1:
        raise ClusteringError("iterations must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    centroids = _kmeans_pp(points, k, rng)
    counts = np.zeros(k, dtype=np.int64)
    history: list[float] = []
    batch = min(batch, n)
    for _ in range(iterations):
        sample = rng.choice(n, size=batch, replace=False)
        assigned = kernels.nearest_center(points[sample], centroids)
        for pos, c in enumerate(assigned):
            counts[c] += 1
            eta = 1.0 / counts[c]
            centroids[c] += eta * (points[sample[pos]] - centroids[c])
        if track_inertia:
            history.append(inertia(points, centroids))
    assignments = kernels.nearest_center(points, centroids)
    # re-seed clusters that ended empty to the worst-fit point
    for c in range(k):
        if not np.any(assignments == c):
            sqd = kernels.pairwise_sqdist(points, centroids)
            worst = int(np.argmax(sqd[np.arange(n), assignments]))
            centroids[c] = points[worst]
            counts[c] = 1
            assignments = kernels.nearest_center(points, centroids)
    model = ClusterModel(k, centroids, counts, assignments)
    model.inertia_history = history
    return model


def membership_prob(point: np.ndarray, model: ClusterModel) -> np.ndarray:
    """Inverse-distance cluster membership; probability collapses uniformly
    onto centroids closer than 1e-12 when any exist."""
    diff = model.centroids - point[None, :]
    dist = np.sqrt(np.einsum("kd,kd->k", diff, diff))
    near = dist < _DIST_EPS
    if near.any():
        probs = np.zeros(model.k)
        probs[near] = 1.0 / near.sum()
        return probs
    inv = 1.0 / dist
    return inv / inv.sum()


def silhouette(points: np.ndarray, assignments: np.ndarray) -> float:
    """Mean silhouette over all points; singleton-cluster points score 0."""
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments)
    labels = np.unique(assignments)
    if labels.size < 2:
        raise ClusteringError("silhouette needs at least 2 clusters")
    dist = np.sqrt(kernels.pairwise_sqdist(points, points))
    n = points.shape[0]
    scores = []
    # math.fsum gives the correctly rounded sum, independent of element order
    for i in range(n):
        own = assignments[i]
        own_mask = assignments == own
        own_size = int(own_mask.sum())
        if own_size == 1:
            continue  # contributes 0
        a = math.fsum(dist[i][own_mask]) / (own_size - 1)
        b = min(
            math.fsum(dist[i][assignments == other]) / int((assignments == other).sum())
            for other in labels
            if other != own
        )
        scores.append((b - a) / max(a, b))
    return math.fsum(scores) / n


def sweep_k(points: np.ndarray, k_min: int, k_max: int, seed: int = 0,
            iterations: int = 10, batch: int = 256) -> SweepResult:
    """Fit every k in [k_min, k_max] with the same seed policy and pick the
    silhouette argmax (ties toward smaller k)."""
    if k_min < 2:
        raise ClusteringError("k_min must be >= 2")
    if k_max > len(points):
        raise ClusteringError("k_max exceeds the number of points")
    if k_min > k_max:
        raise ClusteringError("empty sweep range")
    candidates = []
    for k in range(k_min, k_max + 1):
        model = minibatch_kmeans(points, k, iterations, batch, seed=seed)
        candidates.append((k, silhouette(points, model.assignments)))
    best_k = max(candidates, key=lambda kv: (kv[1], -kv[0]))[0]
    return SweepResult(candidates, best_k)
