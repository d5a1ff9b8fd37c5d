"""Joint optimization loops: the single-view KL self-training baseline and
the two multi-view trainers (implicit fusion in the soft assignment,
explicit fusion in the target with an alternating weight solve).

All three loops share one minibatch engine so the multi-view methods with a
single view reproduce the single-view trajectory exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assignment import (
    DecHyper,
    assignment_gradients,
    kl_loss,
    soft_assignment,
    target_distribution,
)
from .autoencoder import MlpParams, encode, encoder_grads
from .dmjc_s import ImportanceWeights, dmjc_s_gradients, multiview_soft_assignment
from .dmjc_t import ApgConfig, ViewWeights, fused_target, objective_t, solve_w_apg
from .metrics import clustering_accuracy
from .numerics import Matrix, Optimizer, make_optimizer


class DivergenceError(RuntimeError):
    """Training state became non-finite."""


@dataclass(frozen=True)
class OptimizerSettings:
    kind: str = "adagrad"
    lr: float = 0.01
    momentum: float = 0.9

    def build(self) -> Optimizer:
        if self.kind == "sgd_momentum":
            return make_optimizer(self.kind, lr=self.lr, momentum=self.momentum)
        return make_optimizer(self.kind, lr=self.lr)


@dataclass
class MultiViewState:
    """Everything the joint stage optimizes: per-view encoders and centroids
    plus the fusion parameters of whichever method is running."""

    encoders: list[MlpParams]
    centroids: list[Matrix]
    hyper: DecHyper
    importance: ImportanceWeights | None = None   # implicit fusion (per-cluster)
    view_weights: ViewWeights | None = None       # explicit fusion (per-view)

    @property
    def n_views(self) -> int:
        return len(self.encoders)

    def copy(self) -> "MultiViewState":
        return MultiViewState(
            [e.copy() for e in self.encoders],
            [mu.copy() for mu in self.centroids],
            self.hyper,
            ImportanceWeights(self.importance.w.copy()) if self.importance else None,
            ViewWeights(self.view_weights.w.copy(), self.view_weights.lam)
            if self.view_weights
            else None,
        )


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    weights: list[np.ndarray] = field(default_factory=list)
    acc_views: list[list[float]] = field(default_factory=list)
    acc_fused: list[float] = field(default_factory=list)
    epochs_run: int = 0
    stopped_early: bool = False


def _check_views(state: MultiViewState, data_views: list[Matrix]) -> int:
    if len(data_views) != state.n_views:
        raise ValueError(f"state has {state.n_views} views, got {len(data_views)} data matrices")
    ns = {x.shape[0] for x in data_views}
    if len(ns) != 1:
        raise ValueError(f"views disagree on sample count: {sorted(ns)}")
    return ns.pop()


def _encode_all(state: MultiViewState, data_views) -> list[Matrix]:
    return [encode(e, x) for e, x in zip(state.encoders, data_views)]


def _gather(state: MultiViewState, with_importance: bool) -> list[np.ndarray]:
    arrays: list[np.ndarray] = []
    for e in state.encoders:
        arrays.extend(e.encoder_arrays())
    arrays.extend(state.centroids)
    if with_importance:
        arrays.append(state.importance.w)
    return arrays


def _scatter(state: MultiViewState, arrays: list[np.ndarray], with_importance: bool) -> None:
    pos = 0
    for e in state.encoders:
        n = 2 * len(e.enc_w)
        e.set_encoder_arrays(arrays[pos : pos + n])
        pos += n
    for v in range(state.n_views):
        state.centroids[v] = arrays[pos]
        pos += 1
    if with_importance:
        state.importance = ImportanceWeights(arrays[pos])


def _step(opt: Optimizer, params, grads, epoch: int) -> list[np.ndarray]:
    try:
        return opt.step(params, grads)
    except ValueError as exc:
        raise DivergenceError(f"epoch {epoch}: {exc}") from exc


def _label_change(prev: np.ndarray | None, now: np.ndarray) -> float | None:
    if prev is None:
        return None
    return float((prev != now).mean())


def _view_accuracies(state, z_views, labels) -> list[float]:
    alpha = state.hyper.alpha
    return [
        clustering_accuracy(
            soft_assignment(z, mu, alpha).argmax(axis=1), labels
        )
        for z, mu in zip(z_views, state.centroids)
    ]


def _train_assignment_fused(
    state: MultiViewState,
    data_views: list[Matrix],
    optimizer: OptimizerSettings,
    rng: np.random.Generator,
    fused: bool,
    labels=None,
    batch_size: int = 256,
    callback=None,
) -> TrainHistory:
    """Shared loop for the single-view trainer (fused=False) and implicit
    multi-view fusion (fused=True). The target is refreshed from the
    full-data assignment every update_interval epochs and frozen in between.
    """
    n = _check_views(state, data_views)
    hyper = state.hyper
    opt = optimizer.build()
    history = TrainHistory()
    prev_labels: np.ndarray | None = None
    p_full: Matrix | None = None

    def full_q() -> tuple[Matrix, list[Matrix]]:
        z_views = _encode_all(state, data_views)
        if fused:
            q = multiview_soft_assignment(
                z_views, state.centroids, state.importance.pi, hyper.alpha
            )
        else:
            q = soft_assignment(z_views[0], state.centroids[0], hyper.alpha)
        return q, z_views

    for epoch in range(hyper.max_epochs):
        if epoch % hyper.update_interval == 0:
            q, _ = full_q()
            p_full = target_distribution(q, hyper.gamma)
            now = q.argmax(axis=1)
            changed = _label_change(prev_labels, now)
            if changed is not None and changed < hyper.label_change_tol:
                history.stopped_early = True
                break
            prev_labels = now

        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            batches = [x[idx] for x in data_views]
            zb = [encode(e, b) for e, b in zip(state.encoders, batches)]
            pb = p_full[idx]
            if fused:
                dz_views, dmu_views, dw = dmjc_s_gradients(
                    zb, state.centroids, state.importance.w, hyper.alpha, pb
                )
            else:
                dz, dmu = assignment_gradients(zb[0], state.centroids[0], pb, hyper.alpha)
                dz_views, dmu_views, dw = [dz], [dmu], None
            grads: list[np.ndarray] = []
            for v in range(state.n_views):
                grads.extend(encoder_grads(state.encoders[v], batches[v], dz_views[v]))
            grads.extend(dmu_views)
            if fused:
                grads.append(dw)
            new_params = _step(opt, _gather(state, fused), grads, epoch)
            _scatter(state, new_params, fused)

        q, z_views = full_q()
        loss = kl_loss(p_full, q)
        if not np.isfinite(loss):
            raise DivergenceError(f"epoch {epoch}: non-finite loss {loss}")
        history.loss.append(loss)
        if fused:
            history.weights.append(state.importance.pi.sum(axis=0))
        if labels is not None:
            history.acc_views.append(_view_accuracies(state, z_views, labels))
            history.acc_fused.append(
                clustering_accuracy(q.argmax(axis=1), labels)
            )
        history.epochs_run += 1
        if callback is not None:
            callback(epoch, {"q": q, "p": p_full, "pi": state.importance.pi if fused else None})
    return history


def dec_train(
    state: MultiViewState,
    data: Matrix,
    optimizer: OptimizerSettings,
    rng: np.random.Generator,
    labels=None,
    batch_size: int = 256,
    callback=None,
) -> TrainHistory:
    """Single-view KL self-training (the joint single-view baseline)."""
    if state.n_views != 1:
        raise ValueError("dec_train expects a single-view state")
    return _train_assignment_fused(
        state, [data], optimizer, rng, fused=False,
        labels=labels, batch_size=batch_size, callback=callback,
    )


def dmjc_s_train(
    state: MultiViewState,
    data_views: list[Matrix],
    optimizer: OptimizerSettings,
    rng: np.random.Generator,
    labels=None,
    batch_size: int = 256,
    callback=None,
) -> TrainHistory:
    """Implicit fusion: jointly optimizes encoders, centroids and the
    importance weights under the fused-assignment KL objective.

    The per-epoch weight history records the per-view importance summed over
    clusters."""
    if state.importance is None:
        raise ValueError("dmjc_s_train needs state.importance")
    return _train_assignment_fused(
        state, data_views, optimizer, rng, fused=True,
        labels=labels, batch_size=batch_size, callback=callback,
    )


def dmjc_t_train(
    state: MultiViewState,
    data_views: list[Matrix],
    optimizer: OptimizerSettings,
    rng: np.random.Generator,
    labels=None,
    batch_size: int = 256,
    apg: ApgConfig = ApgConfig(),
    callback=None,
) -> TrainHistory:
    """Explicit fusion with alternating optimization: each epoch refreshes
    the per-view assignments and targets, runs minibatch updates of encoders
    and centroids against the frozen fused target, then re-solves the view
    weights on a fresh full-data snapshot."""
    if state.view_weights is None:
        raise ValueError("dmjc_t_train needs state.view_weights")
    n = _check_views(state, data_views)
    hyper = state.hyper
    lam = state.view_weights.lam
    opt = optimizer.build()
    history = TrainHistory()
    prev_labels: np.ndarray | None = None

    def snapshot():
        z_views = _encode_all(state, data_views)
        q_views = [
            soft_assignment(z, mu, hyper.alpha)
            for z, mu in zip(z_views, state.centroids)
        ]
        p_views = [target_distribution(q, hyper.gamma) for q in q_views]
        return z_views, q_views, p_views

    for epoch in range(hyper.max_epochs):
        _, q_views, p_views = snapshot()
        p_fused = fused_target(p_views, state.view_weights.w)
        now = p_fused.argmax(axis=1)
        changed = _label_change(prev_labels, now)
        if changed is not None and changed < hyper.label_change_tol:
            history.stopped_early = True
            break
        prev_labels = now

        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            batches = [x[idx] for x in data_views]
            zb = [encode(e, b) for e, b in zip(state.encoders, batches)]
            pb = p_fused[idx]
            grads: list[np.ndarray] = []
            dmu_views = []
            for v in range(state.n_views):
                dz, dmu = assignment_gradients(zb[v], state.centroids[v], pb, hyper.alpha)
                grads.extend(encoder_grads(state.encoders[v], batches[v], dz))
                dmu_views.append(dmu)
            grads.extend(dmu_views)
            new_params = _step(opt, _gather(state, False), grads, epoch)
            _scatter(state, new_params, False)

        z_views, q_views, p_views = snapshot()
        result = solve_w_apg(p_views, q_views, lam, apg, w_init=state.view_weights.w)
        state.view_weights = ViewWeights(result.w, lam)
        loss = objective_t(p_views, q_views, result.w, lam)
        if not np.isfinite(loss):
            raise DivergenceError(f"epoch {epoch}: non-finite loss {loss}")
        history.loss.append(loss)
        history.weights.append(result.w.copy())
        if labels is not None:
            history.acc_views.append(_view_accuracies(state, z_views, labels))
            fused_now = fused_target(p_views, result.w)
            history.acc_fused.append(
                clustering_accuracy(fused_now.argmax(axis=1), labels)
            )
        history.epochs_run += 1
        if callback is not None:
            callback(epoch, {
                "q_views": q_views, "p_views": p_views,
                "w": result.w, "apg": result,
            })
    return history


def predict_dec(state: MultiViewState, data: Matrix) -> np.ndarray:
    """Hard labels from the single-view soft assignment (ties to lowest index)."""
    z = encode(state.encoders[0], data)
    return soft_assignment(z, state.centroids[0], state.hyper.alpha).argmax(axis=1)


def predict_s(state: MultiViewState, data_views: list[Matrix]) -> np.ndarray:
    """Hard labels from the fused soft assignment (ties to lowest index)."""
    z_views = _encode_all(state, data_views)
    q = multiview_soft_assignment(z_views, state.centroids, state.importance.pi, state.hyper.alpha)
    return q.argmax(axis=1)


def predict_t(state: MultiViewState, data_views: list[Matrix]) -> np.ndarray:
    """Hard labels from the fused target distribution (ties to lowest index)."""
    z_views = _encode_all(state, data_views)
    p_views = [
        target_distribution(soft_assignment(z, mu, state.hyper.alpha), state.hyper.gamma)
        for z, mu in zip(z_views, state.centroids)
    ]
    return fused_target(p_views, state.view_weights.w).argmax(axis=1)
