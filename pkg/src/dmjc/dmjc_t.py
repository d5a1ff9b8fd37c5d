"""Explicit multi-view fusion: per-view assignments stay single-view, the
self-training target is a simplex-weighted mixture of the per-view targets,
and the weights solve an l2-regularized convex subproblem by accelerated
proximal gradient with projection onto the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assignment import Q_FLOOR, assignment_gradients, kl_loss
from .numerics import Matrix

W_FLOOR = 1e-8


@dataclass
class ViewWeights:
    """Per-view mixture weights: strictly positive, summing to 1."""

    w: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1:
            raise ValueError("view weights must be a vector")
        if (self.w <= 0.0).any() or abs(self.w.sum() - 1.0) > 1e-10:
            raise ValueError(f"view weights must be strictly positive and sum to 1, got {self.w}")
        if self.lam < 0.0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    @classmethod
    def uniform(cls, n_views: int, lam: float = 0.0) -> "ViewWeights":
        return cls(np.full(n_views, 1.0 / n_views), lam)


@dataclass(frozen=True)
class ApgConfig:
    max_iter: int = 500
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    rel_tol: float = 1e-8

    def __post_init__(self):
        if self.max_iter < 1 or self.step_init <= 0 or self.rel_tol <= 0:
            raise ValueError("max_iter, step_init and rel_tol must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError(f"backtrack_factor must be in (0,1), got {self.backtrack_factor}")


@dataclass
class ApgResult:
    w: np.ndarray
    value: float
    converged: bool
    n_iter: int
    history: list[float] = field(default_factory=list)


def simplex_project(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w : w >= 0, sum w = 1} by the sorting
    algorithm, then floored at 1e-8 and renormalized for strict positivity."""
    v = np.asarray(v, dtype=np.float64)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = np.nonzero(u - (css - 1.0) / j > 0.0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    x = np.maximum(v - theta, 0.0)
    x = np.maximum(x, W_FLOOR)
    return x / x.sum()


def fused_target(p_views: list[Matrix], w: np.ndarray) -> Matrix:
    """Mixture target p_ij = sum_v w_v p_ij^(v); rows stay stochastic because
    the weights are a convex combination."""
    if len(p_views) != len(w):
        raise ValueError(f"{len(p_views)} target views but {len(w)} weights")
    shapes = {p.shape for p in p_views}
    if len(shapes) != 1:
        raise ValueError(f"per-view targets disagree on shape: {shapes}")
    fused = w[0] * p_views[0]
    for wv, pv in zip(w[1:], p_views[1:]):
        fused = fused + wv * pv
    return fused


def objective_t(p_views: list[Matrix], q_views: list[Matrix], w: np.ndarray, lam: float) -> float:
    """sum_v' KL(fused p || q^(v')) + lam ||w||^2."""
    fused = fused_target(p_views, w)
    total = 0.0
    for q in q_views:
        total += kl_loss(fused, q)
    return total + lam * float(w @ w)


def dmjc_t_network_gradients(
    z: Matrix, centroids: Matrix, p: Matrix, alpha: float
) -> tuple[Matrix, Matrix]:
    """Per-view embedding and centroid gradients with the fused target frozen.

    With fixed weights the objective seen by view v is a plain KL divergence
    against its own soft assignment, so this is the single-view kernel
    gradient evaluated at the fused target.
    """
    return assignment_gradients(z, centroids, p, alpha)


def _w_objective_terms(p_views, q_views):
    p_stack = np.stack(p_views)                      # [V, N, K]
    log_q_sum = np.zeros_like(p_views[0])
    for q in q_views:
        log_q_sum += np.log(np.maximum(q, Q_FLOOR))
    return p_stack, log_q_sum


def _w_value(w, p_stack, log_q_sum, lam):
    fused = np.tensordot(w, p_stack, axes=1)
    log_f = np.log(np.maximum(fused, 1e-300))
    n_views = p_stack.shape[0]
    kl = n_views * float((fused * log_f).sum()) - float((fused * log_q_sum).sum())
    return kl + lam * float(w @ w)


def _w_grad(w, p_stack, log_q_sum, lam):
    fused = np.tensordot(w, p_stack, axes=1)
    log_f = np.log(np.maximum(fused, 1e-300))
    n_views = p_stack.shape[0]
    inner = n_views * (log_f + 1.0) - log_q_sum
    return np.tensordot(p_stack, inner, axes=2) + 2.0 * lam * w


def solve_w_apg(
    p_views: list[Matrix],
    q_views: list[Matrix],
    lam: float,
    config: ApgConfig = ApgConfig(),
    w_init: np.ndarray | None = None,
) -> ApgResult:
    """Minimize the fused-target objective over the simplex with monotone
    accelerated proximal gradient (Nesterov momentum, backtracking line
    search, projection as the proximal step).

    The distributions are treated as fixed. The accepted-iterate objective
    is non-increasing by construction; if max_iter is hit before the
    relative-decrease tolerance, the best iterate is returned with
    converged=False.
    """
    n_views = len(p_views)
    if len(q_views) != n_views:
        raise ValueError(f"{n_views} target views but {len(q_views)} assignment views")
    p_stack, log_q_sum = _w_objective_terms(p_views, q_views)

    x = simplex_project(w_init if w_init is not None else np.full(n_views, 1.0 / n_views))
    fx = _w_value(x, p_stack, log_q_sum, lam)
    y = x.copy()
    t = 1.0
    step = config.step_init
    history = [fx]
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        g = _w_grad(y, p_stack, log_q_sum, lam)
        fy = _w_value(y, p_stack, log_q_sum, lam)
        while True:
            z = simplex_project(y - step * g)
            dz = z - y
            bound = fy + float(g @ dz) + float(dz @ dz) / (2.0 * step) + 1e-12
            if _w_value(z, p_stack, log_q_sum, lam) <= bound or step < 1e-16:
                break
            step *= config.backtrack_factor
        fz = _w_value(z, p_stack, log_q_sum, lam)

        if fz <= fx:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = simplex_project(z + ((t - 1.0) / t_next) * (z - x))
            decrease = fx - fz
            x, fx, t = z, fz, t_next
            history.append(fx)
            if decrease <= config.rel_tol * max(1.0, abs(fx)):
                converged = True
                break
        else:
            # candidate overshot: keep x, restart momentum from it
            history.append(fx)
            if np.array_equal(y, x):
                converged = True  # plain proximal step from x makes no progress
                break
            y = x.copy()
            t = 1.0
    return ApgResult(x, fx, converged, it, history)
