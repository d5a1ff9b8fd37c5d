"""K-means++ seeding and Lloyd iterations, used for centroid initialization
on (concatenated) embeddings and for the separate-clustering baselines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import Matrix, pairwise_sqdist


@dataclass
class KmeansResult:
    centroids: Matrix                 # [K x D]
    labels: np.ndarray                # [N] ints in [0, K)
    inertia: float                    # sum of squared distances to assigned centroid
    inertia_history: list[float] = field(default_factory=list)


def assign(centroids: Matrix, data: Matrix) -> np.ndarray:
    """Nearest-centroid labels; exact distance ties go to the lowest index."""
    d2 = pairwise_sqdist(data, centroids)
    return d2.argmin(axis=1)


def _kpp_seed(data: Matrix, k: int, rng: np.random.Generator) -> Matrix:
    n = data.shape[0]
    centers = np.empty((k, data.shape[1]))
    first = int(rng.integers(n))
    centers[0] = data[first]
    d2 = ((data - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total > 0.0:
            probs = d2 / total
            idx = int(np.searchsorted(probs.cumsum(), rng.random(), side="right"))
            idx = min(idx, n - 1)
        else:
            # all remaining points coincide with chosen centers
            idx = int(rng.integers(n))
        centers[j] = data[idx]
        d2 = np.minimum(d2, ((data - centers[j]) ** 2).sum(axis=1))
    return centers


def _fix_empty(labels: np.ndarray, d2: Matrix, k: int) -> np.ndarray:
    """Re-seed each empty cluster with the point farthest from its assigned
    centroid, so the labels always cover a K-way partition."""
    counts = np.bincount(labels, minlength=k)
    if (counts > 0).all():
        return labels
    labels = labels.copy()
    own = d2[np.arange(len(labels)), labels].copy()
    for j in np.flatnonzero(counts == 0):
        far = int(own.argmax())
        labels[far] = j
        own[far] = -np.inf  # keep distinct donors for multiple empty clusters
    return labels


def _lloyd(data: Matrix, k: int, rng, max_iter: int, tol: float) -> KmeansResult:
    centroids = _kpp_seed(data, k, rng)
    history: list[float] = []
    labels = np.zeros(data.shape[0], dtype=np.intp)
    for _ in range(max_iter):
        d2 = pairwise_sqdist(data, centroids)
        labels = _fix_empty(d2.argmin(axis=1), d2, k)
        new_centroids = np.empty_like(centroids)
        for j in range(k):
            new_centroids[j] = data[labels == j].mean(axis=0)
        inertia = float(((data - new_centroids[labels]) ** 2).sum())
        history.append(inertia)
        shift = float(np.abs(new_centroids - centroids).max())
        centroids = new_centroids
        if shift < tol:
            break
    return KmeansResult(centroids, labels, history[-1], history)


def kmeans(
    data: Matrix,
    k: int,
    rng: np.random.Generator,
    max_iter: int = 300,
    tol: float = 1e-6,
    n_restarts: int = 10,
) -> KmeansResult:
    """Best of n_restarts k-means++ seeded Lloyd runs (lowest inertia wins)."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("kmeans needs a non-empty 2-D data matrix")
    n = data.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points n={n}")
    best: KmeansResult | None = None
    for _ in range(max(1, n_restarts)):
        result = _lloyd(data, k, rng, max_iter, tol)
        if best is None or result.inertia < best.inertia:
            best = result
    return best
