import math

import numpy as np
import pytest

from pglee.clustering import (
    ClusteringError,
    ClusterModel,
    inertia,
    membership_prob,
    minibatch_kmeans,
    silhouette,
    sweep_k,
)


def blobs(rng, centers, per=25, spread=0.05):
    pts, labels = [], []
    for idx, c in enumerate(centers):
        pts.append(np.asarray(c) + rng.normal(0, spread, (per, len(c))))
        labels.extend([idx] * per)
    return np.vstack(pts), np.array(labels)


class TestMinibatchKmeans:
    def test_single_cluster_is_mean(self):
        rng = np.random.default_rng(0)
        points = rng.standard_normal((40, 3))
        model = minibatch_kmeans(points, 1, iterations=50, batch=40, seed=1)
        assert np.linalg.norm(model.centroids[0] - points.mean(axis=0)) < 1e-9

    def test_two_separated_blobs(self):
        rng = np.random.default_rng(1)
        points, labels = blobs(rng, [[0.0, 0.0], [100.0, 100.0]], spread=1.0)
        model = minibatch_kmeans(points, 2, iterations=20, batch=len(points), seed=2)
        split = model.assignments[labels == 0]
        other = model.assignments[labels == 1]
        assert len(set(split.tolist())) == 1
        assert len(set(other.tolist())) == 1
        assert split[0] != other[0]

    def test_full_batch_inertia_monotone(self):
        rng = np.random.default_rng(2)
        for seed in range(30):
            points = rng.standard_normal((60, 4))
            model = minibatch_kmeans(points, 4, iterations=15, batch=len(points),
                                     seed=seed, track_inertia=True)
            hist = model.inertia_history
            assert all(hist[i + 1] <= hist[i] + 1e-9 for i in range(len(hist) - 1))

    def test_too_few_points(self):
        with pytest.raises(ClusteringError):
            minibatch_kmeans(np.zeros((2, 2)), 3)

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        points = rng.standard_normal((50, 3))
        a = minibatch_kmeans(points, 3, seed=9)
        b = minibatch_kmeans(points, 3, seed=9)
        assert np.array_equal(a.centroids, b.centroids)
        assert np.array_equal(a.assignments, b.assignments)

    def test_no_empty_clusters(self):
        rng = np.random.default_rng(4)
        points = rng.standard_normal((30, 2))
        model = minibatch_kmeans(points, 8, iterations=2, batch=5, seed=5)
        assert set(model.assignments.tolist()) == set(range(8))


class TestMembershipProb:
    def test_single_cluster(self):
        model = ClusterModel(1, np.array([[5.0, 5.0]]), np.ones(1, dtype=np.int64),
                             np.zeros(0, dtype=np.int64))
        assert membership_prob(np.array([1.0, 1.0]), model).tolist() == [1.0]

    def test_equidistant_exact_half(self):
        model = ClusterModel(2, np.array([[-1.0, 0.0], [1.0, 0.0]]),
                             np.ones(2, dtype=np.int64), np.zeros(0, dtype=np.int64))
        probs = membership_prob(np.array([0.0, 3.0]), model)
        assert probs.tolist() == [0.5, 0.5]

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(5)
        model = ClusterModel(5, rng.standard_normal((5, 4)), np.ones(5, dtype=np.int64),
                             np.zeros(0, dtype=np.int64))
        for _ in range(50):
            point = rng.standard_normal(4)
            probs = membership_prob(point, model)
            dists = [math.dist(point, c) for c in model.centroids]
            inv = [1.0 / d for d in dists]
            expected = [v / sum(inv) for v in inv]
            assert abs(probs.sum() - 1.0) < 1e-12
            assert np.allclose(probs, expected, atol=1e-12)

    def test_collapse_onto_coincident_centroid(self):
        model = ClusterModel(3, np.array([[0.0, 0.0], [0.0, 0.0], [9.0, 9.0]]),
                             np.ones(3, dtype=np.int64), np.zeros(0, dtype=np.int64))
        probs = membership_prob(np.array([0.0, 0.0]), model)
        assert probs.tolist() == [0.5, 0.5, 0.0]

    def test_argmax_is_nearest_centroid(self):
        rng = np.random.default_rng(6)
        model = ClusterModel(4, rng.standard_normal((4, 3)), np.ones(4, dtype=np.int64),
                             np.zeros(0, dtype=np.int64))
        for _ in range(200):
            point = rng.standard_normal(3)
            probs = membership_prob(point, model)
            nearest = int(np.argmin(np.linalg.norm(model.centroids - point, axis=1)))
            assert int(np.argmax(probs)) == nearest

    def test_translation_invariance(self):
        rng = np.random.default_rng(7)
        model = ClusterModel(3, rng.standard_normal((3, 2)), np.ones(3, dtype=np.int64),
                             np.zeros(0, dtype=np.int64))
        point = rng.standard_normal(2)
        shift = np.array([1234.5, -67.8])
        shifted = ClusterModel(3, model.centroids + shift, model.counts, model.assignments)
        assert np.allclose(membership_prob(point, model),
                           membership_prob(point + shift, shifted), atol=1e-9)


def _dist(p, q):
    # naive sqrt-of-sum (math.dist's scaled algorithm can differ by 1 ulp)
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, q)))


def silhouette_oracle(points, assignments):
    """Independent plain-Python silhouette implementation."""
    n = len(points)
    labels = sorted(set(assignments))
    total = []
    for i in range(n):
        own = assignments[i]
        same = [j for j in range(n) if assignments[j] == own and j != i]
        if not same:
            continue
        a = math.fsum(_dist(points[i], points[j]) for j in same) / len(same)
        b = min(
            math.fsum(_dist(points[i], points[j]) for j in range(n) if assignments[j] == lab)
            / sum(1 for j in range(n) if assignments[j] == lab)
            for lab in labels
            if lab != own
        )
        total.append((b - a) / max(a, b))
    return math.fsum(total) / n


class TestSilhouette:
    def test_hand_computed_two_pairs(self):
        points = np.array([[0.0], [0.1], [10.0], [10.1]])
        assignments = np.array([0, 0, 1, 1])
        score = silhouette(points, assignments)
        # a = 0.1 for every point; b = (9.9 + 10.0) / 2 or (10.0 + 10.1) / 2
        expected = silhouette_oracle(points.tolist(), assignments.tolist())
        assert score == expected
        assert abs(score - 0.990) < 1e-3

    def test_two_singletons_zero(self):
        points = np.array([[0.0, 0.0], [5.0, 5.0]])
        assert silhouette(points, np.array([0, 1])) == 0.0

    def test_single_cluster_errors(self):
        with pytest.raises(ClusteringError):
            silhouette(np.zeros((4, 2)), np.zeros(4, dtype=int))

    def test_matches_oracle_exactly(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            n = int(rng.integers(6, 25))
            dim = int(rng.integers(1, 5))
            points = rng.standard_normal((n, dim))
            assignments = rng.integers(0, 3, n)
            if len(set(assignments.tolist())) < 2:
                continue
            assert silhouette(points, assignments) == silhouette_oracle(
                points.tolist(), assignments.tolist()
            )

    def test_translation_invariance(self):
        rng = np.random.default_rng(9)
        points = rng.standard_normal((20, 3))
        assignments = rng.integers(0, 3, 20)
        shifted = points + np.array([100.0, -50.0, 7.0])
        assert abs(silhouette(points, assignments) - silhouette(shifted, assignments)) < 1e-9


class TestSweepK:
    def test_planted_four_blobs(self):
        rng = np.random.default_rng(10)
        points, _ = blobs(rng, [[0, 0], [50, 0], [0, 50], [50, 50]], per=30, spread=0.5)
        result = sweep_k(points, 2, 8, seed=11, iterations=20, batch=len(points))
        assert result.best_k == 4

    def test_single_candidate(self):
        rng = np.random.default_rng(11)
        points, _ = blobs(rng, [[0, 0], [50, 50]], per=10, spread=0.5)
        result = sweep_k(points, 2, 2, seed=12)
        assert result.best_k == 2
        assert len(result.candidates) == 1

    def test_tie_breaks_toward_smaller_k(self):
        class Recorded:
            pass

        # identical scores forced by degenerate data: all sweeps score equally
        points = np.array([[0.0, 0.0]] * 5 + [[10.0, 10.0]] * 5)
        result = sweep_k(points, 2, 4, seed=13)
        best_score = max(s for _, s in result.candidates)
        ties = [k for k, s in result.candidates if s == best_score]
        assert result.best_k == min(ties)

    def test_invalid_range(self):
        with pytest.raises(ClusteringError):
            sweep_k(np.zeros((10, 2)), 1, 5)
        with pytest.raises(ClusteringError):
            sweep_k(np.zeros((4, 2)), 2, 10)


def test_inertia_matches_definition():
    rng = np.random.default_rng(12)
    points = rng.standard_normal((30, 3))
    centroids = rng.standard_normal((4, 3))
    expected = sum(min(math.dist(p, c) ** 2 for c in centroids) for p in points)
    assert abs(inertia(points, centroids) - expected) < 1e-9


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(13)
    model = minibatch_kmeans(rng.standard_normal((20, 3)), 3, seed=14)
    model.role = "trigger"
    path = tmp_path / "clusters.json"
    model.save(path)
    loaded = ClusterModel.load(path)
    assert loaded.role == "trigger"
    assert loaded.k == 3
    assert np.array_equal(loaded.centroids, model.centroids)
