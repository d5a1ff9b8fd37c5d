"""Clustering evaluation: accuracy under optimal cluster-to-class matching,
normalized mutual information (geometric-mean normalization), and the
adjusted Rand index."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def _as_labels(x, name: str) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a 1-D label vector")
    if a.size == 0:
        raise ValueError(f"{name} is empty")
    return a.astype(np.int64)


def contingency(pred, truth) -> np.ndarray:
    """Counts matrix indexed by (pred cluster, true class), compact ids."""
    pred = _as_labels(pred, "pred")
    truth = _as_labels(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: pred {pred.size} vs truth {truth.size}")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    c = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(c, (pi, ti), 1)
    return c


def clustering_accuracy(pred, truth) -> float:
    """Best one-to-one cluster/class matching accuracy (Hungarian on the
    zero-padded square contingency matrix)."""
    c = contingency(pred, truth)
    side = max(c.shape)
    padded = np.zeros((side, side), dtype=np.int64)
    padded[: c.shape[0], : c.shape[1]] = c
    rows, cols = linear_sum_assignment(-padded)
    return float(padded[rows, cols].sum()) / float(c.sum())


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the marginal entropies
    (natural logs); degenerate single-cluster cases give 0."""
    c = contingency(pred, truth).astype(np.float64)
    n = c.sum()
    pxy = c / n
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    outer = px[:, None] * py[None, :]
    mask = pxy > 0.0
    mi = float((pxy[mask] * np.log(pxy[mask] / outer[mask])).sum())
    hx = float(-(px[px > 0] * np.log(px[px > 0])).sum())
    hy = float(-(py[py > 0] * np.log(py[py > 0])).sum())
    denom = np.sqrt(hx * hy)
    if denom == 0.0:
        return 0.0
    return mi / denom


def ari(pred, truth) -> float:
    """Adjusted Rand index under the permutation model."""
    c = contingency(pred, truth).astype(np.float64)
    n = c.sum()

    def comb2(x):
        return x * (x - 1.0) / 2.0

    sum_cells = comb2(c).sum()
    sum_rows = comb2(c.sum(axis=1)).sum()
    sum_cols = comb2(c.sum(axis=0)).sum()
    expected = sum_rows * sum_cols / comb2(n) if n >= 2 else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    denom = max_index - expected
    if denom == 0.0:
        # both partitions trivial; identical iff the index is maximal
        return 1.0
    return float((sum_cells - expected) / denom)
