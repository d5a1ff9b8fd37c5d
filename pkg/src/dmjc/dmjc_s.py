"""Implicit multi-view fusion: the fused soft assignment mixes the per-view
Student-t kernels with learnable per-cluster-per-view importance weights,
parameterized through a row-softmax so they stay on the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assignment import Q_FLOOR, kernel_grads, pq_coefficient, student_t_kernel
from .numerics import Matrix


def importance_softmax(w: Matrix) -> Matrix:
    """Row-wise softmax over views of the unconstrained [K x V] weights."""
    shifted = w - w.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ImportanceWeights:
    """Unconstrained [K x V] weights; the derived importance rows live on the
    simplex by construction."""

    w: Matrix

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 2:
            raise ValueError("importance weights must be a [K x V] matrix")

    @property
    def pi(self) -> Matrix:
        return importance_softmax(self.w)

    @classmethod
    def uniform(cls, k: int, n_views: int) -> "ImportanceWeights":
        # zeros give exactly 1/V importance per view
        return cls(np.zeros((k, n_views)))


def _fused_parts(z_views, mu_views, pi, alpha):
    """Per-view kernels and the fused assignment.

    Returns (t_views, u_views, weighted_views, row_total, q) where
    weighted = pi * t per view and q = (sum_v weighted) / row_total.
    """
    n_views = len(z_views)
    if len(mu_views) != n_views or pi.shape[1] != n_views:
        raise ValueError("z, centroids and importance weights disagree on the view count")
    t_views, u_views, weighted = [], [], []
    for v in range(n_views):
        t, u = student_t_kernel(z_views[v], mu_views[v], alpha)
        t_views.append(t)
        u_views.append(u)
        weighted.append(t * pi[:, v][None, :])
    numer = weighted[0].copy()
    for s in weighted[1:]:
        numer += s
    row_total = numer.sum(axis=1, keepdims=True)
    q = numer / row_total
    return t_views, u_views, weighted, row_total, q


def multiview_soft_assignment(
    z_views: list[Matrix],
    mu_views: list[Matrix],
    pi: Matrix,
    alpha: float,
) -> Matrix:
    """Fused soft assignment:

    q_ij = sum_v pi_jv t_ij^(v) / sum_{j'} sum_{v'} pi_{j'v'} t_{ij'}^{(v')}
    """
    _, _, _, _, q = _fused_parts(z_views, mu_views, pi, alpha)
    return q


def dmjc_s_gradients(
    z_views: list[Matrix],
    mu_views: list[Matrix],
    w: Matrix,
    alpha: float,
    p: Matrix,
) -> tuple[list[Matrix], list[Matrix], Matrix]:
    """Gradients of the fused KL loss (target p frozen) w.r.t. every view's
    embeddings and centroids and the unconstrained weights w.

    The per-pair coefficient is the single-view (p-q) factor scaled by the
    view's share of the fused assignment, so with one view this reduces
    exactly to the single-view gradients.
    """
    pi = importance_softmax(w)
    t_views, u_views, weighted, row_total, q = _fused_parts(z_views, mu_views, pi, alpha)
    qc = np.maximum(q, Q_FLOOR)

    dz_views, dmu_views = [], []
    for v in range(len(z_views)):
        share = (weighted[v] / row_total) / qc
        coeff = pq_coefficient(p, q, u_views[v], alpha) * share
        dz, dmu = kernel_grads(z_views[v], mu_views[v], coeff, alpha)
        dz_views.append(dz)
        dmu_views.append(dmu)

    # d(loss)/d(pi_jv) = sum_i t_ij^(v)/S_i (1 - p_ij/q_ij), then the softmax
    # Jacobian turns it into the unconstrained-weight gradient
    bracket = 1.0 - p / qc
    g_pi = np.stack(
        [(t_views[v] / row_total * bracket).sum(axis=0) for v in range(len(z_views))],
        axis=1,
    )
    dw = pi * (g_pi - (pi * g_pi).sum(axis=1, keepdims=True))
    return dz_views, dmu_views, dw
