"""Single-view clustering core: Student-t soft assignment, the sharpened
self-training target, the KL clustering loss, and per-view centroid
initialization from k-means on concatenated embeddings.

The gradient helpers here are shared verbatim by the joint trainers so the
multi-view paths reduce exactly to the single-view one when V=1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kmeans import kmeans
from .numerics import Matrix, pairwise_sqdist

Q_FLOOR = 1e-12


@dataclass(frozen=True)
class DecHyper:
    """Knobs of the KL self-training loop."""

    alpha: float = 1.0            # Student-t degrees of freedom
    gamma: float = 2.0            # target sharpening exponent
    update_interval: int = 1      # epochs between target refreshes
    max_epochs: int = 100
    label_change_tol: float = 0.001

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.gamma <= 1:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if self.update_interval < 1 or self.max_epochs < 1:
            raise ValueError("update_interval and max_epochs must be >= 1")
        if not 0.0 <= self.label_change_tol <= 1.0:
            raise ValueError(f"label_change_tol must be in [0,1], got {self.label_change_tol}")


def student_t_kernel(z: Matrix, centroids: Matrix, alpha: float) -> tuple[Matrix, Matrix]:
    """t_ij = (1 + ||z_i - mu_j||^2 / alpha)^(-(alpha+1)/2).

    Returns (t, u) with u = 1 + ||z_i - mu_j||^2 / alpha, which reappears in
    every gradient formula.
    """
    if centroids.shape[0] < 1:
        raise ValueError("need at least one centroid")
    u = 1.0 + pairwise_sqdist(z, centroids) / alpha
    t = u ** (-(alpha + 1.0) / 2.0)
    return t, u


def soft_assignment(z: Matrix, centroids: Matrix, alpha: float) -> Matrix:
    """Row-stochastic soft assignment from the Student-t kernel."""
    t, _ = student_t_kernel(z, centroids, alpha)
    return t / t.sum(axis=1, keepdims=True)


def target_distribution(q: Matrix, gamma: float) -> Matrix:
    """Self-training target: rows of q raised to gamma, renormalized per row."""
    if gamma <= 1:
        raise ValueError(f"gamma must be > 1, got {gamma}")
    powered = q ** gamma
    row = powered.sum(axis=1, keepdims=True)
    if (row == 0.0).any():
        raise ValueError("target distribution undefined: a row of q^gamma sums to 0")
    return powered / row


def kl_loss(p: Matrix, q: Matrix) -> float:
    """sum_ij p_ij log(p_ij / q_ij), with 0 log 0 = 0 and q floored at 1e-12."""
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: p {p.shape} vs q {q.shape}")
    qc = np.maximum(q, Q_FLOOR)
    logs = np.zeros_like(p)
    mask = p > 0.0
    logs[mask] = np.log(p[mask]) - np.log(qc[mask])
    return float((p * logs).sum())


def pq_coefficient(p: Matrix, q: Matrix, u: Matrix, alpha: float) -> Matrix:
    """Per-pair factor ((alpha+1)/2) (p_ij - q_ij) / u_ij of the kernel gradients."""
    return (0.5 * (alpha + 1.0)) * (p - q) / u


def kernel_grads(z: Matrix, centroids: Matrix, coeff: Matrix, alpha: float) -> tuple[Matrix, Matrix]:
    """Turn per-pair coefficients c_ij into embedding and centroid gradients:

    d/dz_i  = (2/alpha) sum_j c_ij (z_i - mu_j)
    d/dmu_j = -(2/alpha) sum_i c_ij (z_i - mu_j)
    """
    scale = 2.0 / alpha
    dz = scale * (coeff.sum(axis=1, keepdims=True) * z - coeff @ centroids)
    dmu = -scale * (coeff.T @ z - coeff.sum(axis=0)[:, None] * centroids)
    return dz, dmu


def assignment_gradients(z: Matrix, centroids: Matrix, p: Matrix, alpha: float) -> tuple[Matrix, Matrix]:
    """Gradients of the KL clustering loss w.r.t. embeddings and centroids,
    with the target p held constant."""
    t, u = student_t_kernel(z, centroids, alpha)
    q = t / t.sum(axis=1, keepdims=True)
    coeff = pq_coefficient(p, q, u, alpha)
    return kernel_grads(z, centroids, coeff, alpha)


def init_view_centroids(
    embeddings: list[Matrix],
    k: int,
    rng: np.random.Generator,
    **kmeans_kwargs,
) -> tuple[list[Matrix], np.ndarray]:
    """K-means on the column-concatenated view embeddings; each view's
    centroids are the per-view means of the resulting clusters.

    Slicing the concatenated centroids per view gives the same values, but
    recomputing means keeps the construction dimension-safe.
    """
    ns = {z.shape[0] for z in embeddings}
    if len(ns) != 1:
        raise ValueError(f"views disagree on sample count: {sorted(ns)}")
    concat = np.concatenate(embeddings, axis=1)
    result = kmeans(concat, k, rng, **kmeans_kwargs)
    labels = result.labels
    centroids = []
    for z in embeddings:
        mu = np.empty((k, z.shape[1]))
        for j in range(k):
            mu[j] = z[labels == j].mean(axis=0)
        centroids.append(mu)
    return centroids, labels
