"""Structural feature analysis: 2-d projection, clustering, overlap scores.

The t-SNE here is the exact (all-pairs) variant: per-point Gaussian
bandwidths found by bisection against the target perplexity, symmetrized
affinities, Student-t low-dimensional kernel, and momentum gradient descent
with early exaggeration.  K-means uses k-means++ seeding and plain Lloyd
iterations.  Both are deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class TooFewPoints(ValueError):
    pass


class KTooLarge(ValueError):
    pass


@dataclass
class Projection2D:
    coordinates: np.ndarray  # (n, 2), aligned to input row order
    kl_divergence: float
    iterations: int
    kl_trace: np.ndarray
    achieved_perplexity: np.ndarray  # per point, after bisection


@dataclass
class Clustering:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    iterations: int
    inertia_trace: np.ndarray


def _conditional_affinities(
    squared_distances: np.ndarray, perplexity: float, tol: float = 1e-5, max_steps: int = 200
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row Gaussian affinities with bandwidths bisected to the target
    perplexity (exp of the Shannon entropy in nats)."""
    n = squared_distances.shape[0]
    P = np.zeros((n, n), dtype=np.float64)
    achieved = np.zeros(n, dtype=np.float64)
    for i in range(n):
        d = np.delete(squared_distances[i], i)
        beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
        for _ in range(max_steps):
            w = np.exp(-d * beta)
            total = w.sum()
            if total <= 0:
                perp = 1.0
                p = np.full_like(d, 1.0 / d.size)
            else:
                p = w / total
                nz = p > 0
                entropy = -np.sum(p[nz] * np.log(p[nz]))
                perp = np.exp(entropy)
            if abs(perp - perplexity) <= tol:
                break
            if perp > perplexity:
                beta_lo = beta
                beta = beta * 2.0 if beta_hi == np.inf else 0.5 * (beta + beta_hi)
            else:
                beta_hi = beta
                beta = 0.5 * (beta + beta_lo)
        achieved[i] = perp
        row = np.zeros(n)
        row[np.arange(n) != i] = p
        P[i] = row
    return P, achieved


def tsne(
    points: np.ndarray,
    perplexity: float = 30.0,
    iterations: int = 1000,
    seed: int = 0,
    learning_rate: float = 200.0,
    early_exaggeration: float = 12.0,
    exaggeration_iters: int = 250,
) -> Projection2D:
    """Exact t-SNE to 2 dimensions.

    Requires n > 3 * perplexity.  The KL divergence against the true
    (unexaggerated) affinities is tracked every iteration.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n <= 3 * perplexity:
        raise TooFewPoints(f"need n > 3 * perplexity, got n={n}, perplexity={perplexity}")

    sq = np.sum(points**2, axis=1)
    squared_distances = np.maximum(sq[:, None] + sq[None, :] - 2.0 * points @ points.T, 0.0)
    cond, achieved = _conditional_affinities(squared_distances, perplexity)
    P = (cond + cond.T) / (2.0 * n)
    P = np.maximum(P, 1e-12)

    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl_trace = np.zeros(iterations)

    for it in range(iterations):
        momentum = 0.5 if it < exaggeration_iters else 0.8
        P_eff = P * early_exaggeration if it < exaggeration_iters else P

        ysq = np.sum(Y**2, axis=1)
        num = 1.0 / (1.0 + np.maximum(ysq[:, None] + ysq[None, :] - 2.0 * Y @ Y.T, 0.0))
        np.fill_diagonal(num, 0.0)
        Q = np.maximum(num / num.sum(), 1e-12)

        PQ = (P_eff - Q) * num
        grad = 4.0 * (np.diag(PQ.sum(axis=1)) - PQ) @ Y

        flip = np.sign(grad) != np.sign(velocity)
        gains = np.where(flip, gains + 0.2, gains * 0.8)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - learning_rate * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

        kl_trace[it] = float(np.sum(P * np.log(P / Q)))

    return Projection2D(
        coordinates=Y,
        kl_divergence=float(kl_trace[-1]) if iterations else float("nan"),
        iterations=iterations,
        kl_trace=kl_trace,
        achieved_perplexity=achieved,
    )


def kmeans(
    points: np.ndarray, k: int, seed: int = 0, max_iter: int = 300
) -> Clustering:
    """K-means++ seeding followed by Lloyd iterations to a fixpoint.

    Assignment ties go to the lowest centroid index; an emptied cluster is
    reseeded on the point farthest from its assigned centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1:
        raise KTooLarge("k must be >= 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds the number of points ({n})")
    rng = np.random.default_rng(seed)

    # k-means++ seeding
    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    closest = np.sum((points - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total == 0:
            pick = int(rng.integers(n))
        else:
            pick = int(np.searchsorted(np.cumsum(closest / total), rng.random()))
            pick = min(pick, n - 1)
        centroids[c] = points[pick]
        closest = np.minimum(closest, np.sum((points - centroids[c]) ** 2, axis=1))

    assignments = np.full(n, -1, dtype=np.intp)
    trace = []
    iterations = 0
    for _ in range(max_iter):
        distances = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assignments = distances.argmin(axis=1)
        inertia = float(distances[np.arange(n), new_assignments].sum())
        trace.append(inertia)
        iterations += 1
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        for c in range(k):
            members = points[assignments == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
            else:
                worst = int(distances[np.arange(n), assignments].argmax())
                centroids[c] = points[worst]
                assignments[worst] = c
    distances = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    inertia = float(distances[np.arange(n), assignments].sum())
    return Clustering(
        centroids=centroids,
        assignments=assignments,
        inertia=inertia,
        iterations=iterations,
        inertia_trace=np.array(trace),
    )


# ---------------------------------------------------------------------------
# disease-overlap scores


def pair_disease_score(row_a, row_b) -> float:
    """Overlap of two binary disease vectors.

    Entries are summed elementwise; the score is (count of 2s) / (count of
    entries >= 1), i.e. the Jaccard index of the two disease sets, 0 when
    both rows are empty.
    """
    a = np.asarray(row_a, dtype=np.int64).ravel()
    b = np.asarray(row_b, dtype=np.int64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"row lengths differ: {a.shape} vs {b.shape}")
    sums = a + b
    denom = int(np.sum(sums >= 1))
    if denom == 0:
        return 0.0
    return float(np.sum(sums == 2)) / denom


def cluster_similarity_table(assignments, disease_matrix) -> np.ndarray:
    """k x k matrix of mean pair scores between (and within) clusters.

    Diagonal entries average unordered within-cluster pairs, self-pairs
    excluded; a singleton cluster's diagonal is 0 by convention.
    """
    assignments = np.asarray(assignments, dtype=np.intp).ravel()
    disease_matrix = np.asarray(disease_matrix, dtype=np.int64)
    k = int(assignments.max()) + 1 if assignments.size else 0
    table = np.zeros((k, k), dtype=np.float64)
    members = [np.flatnonzero(assignments == c) for c in range(k)]
    for i in range(k):
        for j in range(i, k):
            scores = []
            if i == j:
                rows = members[i]
                for a in range(len(rows)):
                    for b in range(a + 1, len(rows)):
                        scores.append(
                            pair_disease_score(disease_matrix[rows[a]], disease_matrix[rows[b]])
                        )
            else:
                for a in members[i]:
                    for b in members[j]:
                        scores.append(
                            pair_disease_score(disease_matrix[a], disease_matrix[b])
                        )
            value = float(np.mean(scores)) if scores else 0.0
            table[i, j] = value
            table[j, i] = value
    return table


@dataclass
class HeatmapTable:
    """Per test drug: training drugs ordered by embedding distance, with the
    disease-overlap count for each (test, train) pair."""

    order: np.ndarray  # (n_test, n_train) train indices, nearest first
    scores: np.ndarray  # (n_test, n_train) overlap counts in distance order
    distances: np.ndarray  # (n_test, n_train) distances in the same order


def coldstart_label_heatmap(
    train_embeddings: np.ndarray,
    test_embeddings: np.ndarray,
    truth_matrix: np.ndarray,
    repositioning: np.ndarray,
    binarize_threshold: float = 0.5,
) -> HeatmapTable:
    """Order training drugs by embedding distance per test drug and score
    each pair by the shared-disease count.

    ``truth_matrix`` holds the test drugs' ground-truth 0/1 rows;
    ``repositioning`` holds the training drugs' predicted score rows, which
    are binarized at ``binarize_threshold``.  The score is the raw count of
    diseases both rows mark (the conventional cutoff for calling a pair
    related is about 1.7, i.e. 2+ shared diseases; that constant is the
    consumer's to apply).
    """
    train_embeddings = np.asarray(train_embeddings, dtype=np.float64)
    test_embeddings = np.asarray(test_embeddings, dtype=np.float64)
    truth = np.asarray(truth_matrix, dtype=np.int64)
    binarized = (np.asarray(repositioning, dtype=np.float64) > binarize_threshold).astype(np.int64)

    n_test, n_train = test_embeddings.shape[0], train_embeddings.shape[0]
    order = np.zeros((n_test, n_train), dtype=np.intp)
    scores = np.zeros((n_test, n_train), dtype=np.float64)
    dists = np.zeros((n_test, n_train), dtype=np.float64)
    for t in range(n_test):
        d = np.sqrt(((train_embeddings - test_embeddings[t]) ** 2).sum(axis=1))
        idx = np.argsort(d, kind="stable")
        order[t] = idx
        dists[t] = d[idx]
        scores[t] = [float(np.sum((truth[t] + binarized[r]) == 2)) for r in idx]
    return HeatmapTable(order=order, scores=scores, distances=dists)


# ---------------------------------------------------------------------------
# TSV emission (data files only; rendering is out of scope)


def write_projection(path, ids, projection: Projection2D) -> None:
    lines = [
        f"{i}\t{x:.6f}\t{y:.6f}"
        for i, (x, y) in zip(ids, projection.coordinates)
    ]
    _write_lines(path, lines)


def write_assignments(path, ids, clustering: Clustering) -> None:
    lines = [f"{i}\t{c}" for i, c in zip(ids, clustering.assignments)]
    _write_lines(path, lines)


def write_score_table(path, row_ids, col_ids, matrix) -> None:
    matrix = np.asarray(matrix)
    lines = ["\t" + "\t".join(str(c) for c in col_ids)]
    for rid, row in zip(row_ids, matrix):
        lines.append(str(rid) + "\t" + "\t".join(f"{v:.6f}" for v in row))
    _write_lines(path, lines)


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
