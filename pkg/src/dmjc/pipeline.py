"""End-to-end orchestration: load views, pretrain, initialize, run the
configured method, evaluate, and write the report files."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .assignment import init_view_centroids
from .autoencoder import MlpParams, MlpSpec, encode, pretrain
from .config import RunConfig
from .data import DataError, load_feature_matrix, load_labels, normalize
from .dmjc_s import ImportanceWeights
from .dmjc_t import ViewWeights
from .kmeans import kmeans
from .metrics import ari, clustering_accuracy, nmi
from .numerics import child_seeds, make_rng
from .training import (
    DivergenceError,
    MultiViewState,
    OptimizerSettings,
    TrainHistory,
    dec_train,
    dmjc_s_train,
    dmjc_t_train,
    predict_dec,
    predict_s,
    predict_t,
)

log = logging.getLogger("dmjc")

REPORT_FILES = ("metrics.json", "labels.csv", "histories.csv")


class PipelineError(RuntimeError):
    pass


@contextmanager
def _stage(name: str):
    log.info("stage %s", name)
    try:
        yield
    except (DataError, DivergenceError, ValueError) as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"[{name}] {exc}") from exc


@dataclass
class RunReport:
    method: str
    k: int
    seed: int
    n_views: int
    epochs_run: int
    stopped_early: bool
    final_loss: float
    predicted_labels: np.ndarray
    metrics: dict | None = None
    weight_kind: str | None = None      # "pi_sum" (implicit) or "w" (explicit)
    loss_history: list[float] = field(default_factory=list)
    weight_history: list[list[float]] = field(default_factory=list)
    acc_view_history: list[list[float]] = field(default_factory=list)
    acc_fused_history: list[float] = field(default_factory=list)

    def summary_dict(self) -> dict:
        out = {
            "method": self.method,
            "k": self.k,
            "seed": self.seed,
            "n_views": self.n_views,
            "epochs_run": self.epochs_run,
            "stopped_early": self.stopped_early,
            "final_loss": self.final_loss,
            "acc": None,
            "nmi": None,
            "ari": None,
        }
        if self.metrics is not None:
            out.update(self.metrics)
        return out


def _history_into_report(report: RunReport, history: TrainHistory) -> None:
    report.epochs_run = history.epochs_run
    report.stopped_early = history.stopped_early
    report.loss_history = list(history.loss)
    report.weight_history = [list(map(float, w)) for w in history.weights]
    report.acc_view_history = [list(map(float, a)) for a in history.acc_views]
    report.acc_fused_history = list(history.acc_fused)
    report.final_loss = history.loss[-1] if history.loss else float("nan")


def run_pipeline(cfg: RunConfig) -> RunReport:
    """Execute one configured run and return its report (files are written
    separately by emit_report)."""
    with _stage("load"):
        raw_views = [load_feature_matrix(v.feature_file) for v in cfg.views]
        data_views = [normalize(x, v.normalization) for x, v in zip(raw_views, cfg.views)]
        ns = {x.shape[0] for x in data_views}
        if len(ns) != 1:
            raise DataError(f"views disagree on sample count: {sorted(ns)}")
        n = ns.pop()
        labels = None
        if cfg.labels_file is not None:
            labels = load_labels(cfg.labels_file)
            if labels.shape[0] != n:
                raise DataError(
                    f"labels have {labels.shape[0]} rows, views have {n}"
                )
        for i, (x, v) in enumerate(zip(data_views, cfg.views)):
            if x.shape[1] != v.encoder_dims[0]:
                raise DataError(
                    f"view {i}: features have {x.shape[1]} columns but "
                    f"encoder_dims starts with {v.encoder_dims[0]}"
                )

    pretrain_seed, init_seed, joint_seed = child_seeds(cfg.seed, 3)

    with _stage("pretrain"):
        encoders: list[MlpParams] = []
        for x, v in zip(data_views, cfg.views):
            # every view pretrains from the same seed so duplicated views
            # produce identical branches
            params, losses = pretrain(
                MlpSpec(tuple(v.encoder_dims)), x,
                epochs=cfg.pretrain.epochs,
                batch_size=cfg.pretrain.batch_size,
                rng=make_rng(pretrain_seed),
                lr=cfg.pretrain.lr,
            )
            log.info("pretrained %s: loss %.6f -> %.6f", v.name or v.feature_file,
                     losses[0], losses[-1])
            encoders.append(params)

    with _stage("embed"):
        z_views = [encode(e, x) for e, x in zip(encoders, data_views)]

    hyper = cfg.dec_hyper()
    optimizer = OptimizerSettings(
        kind=cfg.joint.optimizer, lr=cfg.joint.lr, momentum=cfg.joint.momentum
    )
    report = RunReport(
        method=cfg.method, k=cfg.k, seed=cfg.seed, n_views=len(cfg.views),
        epochs_run=0, stopped_early=False, final_loss=float("nan"),
        predicted_labels=np.zeros(n, dtype=np.int64),
    )

    if cfg.method == "s_view":
        with _stage("cluster"):
            result = kmeans(z_views[cfg.view_index], cfg.k, make_rng(init_seed))
            report.predicted_labels = result.labels
            report.final_loss = result.inertia
    elif cfg.method == "s_all_views":
        with _stage("cluster"):
            result = kmeans(np.concatenate(z_views, axis=1), cfg.k, make_rng(init_seed))
            report.predicted_labels = result.labels
            report.final_loss = result.inertia
    elif cfg.method == "dec":
        with _stage("init"):
            centroids, _ = init_view_centroids(
                [z_views[cfg.view_index]], cfg.k, make_rng(init_seed)
            )
            state = MultiViewState([encoders[cfg.view_index]], centroids, hyper)
        with _stage("train"):
            history = dec_train(
                state, data_views[cfg.view_index], optimizer, make_rng(joint_seed),
                labels=labels, batch_size=cfg.joint.batch_size,
            )
            _history_into_report(report, history)
            report.predicted_labels = predict_dec(state, data_views[cfg.view_index])
    elif cfg.method == "dmjc_s":
        with _stage("init"):
            centroids, _ = init_view_centroids(z_views, cfg.k, make_rng(init_seed))
            state = MultiViewState(
                encoders, centroids, hyper,
                importance=ImportanceWeights.uniform(cfg.k, len(cfg.views)),
            )
        with _stage("train"):
            history = dmjc_s_train(
                state, data_views, optimizer, make_rng(joint_seed),
                labels=labels, batch_size=cfg.joint.batch_size,
            )
            _history_into_report(report, history)
            report.weight_kind = "pi_sum"
            report.predicted_labels = predict_s(state, data_views)
    elif cfg.method == "dmjc_t":
        with _stage("init"):
            centroids, _ = init_view_centroids(z_views, cfg.k, make_rng(init_seed))
            state = MultiViewState(
                encoders, centroids, hyper,
                view_weights=ViewWeights.uniform(len(cfg.views), cfg.lam),
            )
        with _stage("train"):
            history = dmjc_t_train(
                state, data_views, optimizer, make_rng(joint_seed),
                labels=labels, batch_size=cfg.joint.batch_size,
            )
            _history_into_report(report, history)
            report.weight_kind = "w"
            report.predicted_labels = predict_t(state, data_views)
    else:  # pragma: no cover - rejected by config validation
        raise PipelineError(f"unknown method {cfg.method!r}")

    if labels is not None:
        with _stage("evaluate"):
            report.metrics = {
                "acc": clustering_accuracy(report.predicted_labels, labels),
                "nmi": nmi(report.predicted_labels, labels),
                "ari": ari(report.predicted_labels, labels),
            }
    return report


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _histories_csv(report: RunReport) -> str:
    columns = ["epoch", "loss"]
    v = report.n_views if report.method != "dec" else 1
    if report.weight_kind == "pi_sum":
        columns += [f"pi_sum_{i + 1}" for i in range(v)]
    elif report.weight_kind == "w":
        columns += [f"w_{i + 1}" for i in range(v)]
    with_acc = bool(report.acc_fused_history)
    if with_acc:
        columns += [f"acc_view_{i + 1}" for i in range(v)]
        columns += ["acc_fused"]
    lines = [",".join(columns)]
    for epoch in range(report.epochs_run):
        row = [str(epoch), repr(report.loss_history[epoch])]
        if report.weight_kind is not None:
            row += [repr(x) for x in report.weight_history[epoch]]
        if with_acc:
            row += [repr(x) for x in report.acc_view_history[epoch]]
            row += [repr(report.acc_fused_history[epoch])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, output_dir: str) -> dict[str, str]:
    """Write metrics.json, labels.csv and histories.csv atomically.

    Returns the mapping of file names to paths."""
    os.makedirs(output_dir, exist_ok=True)
    paths = {name: os.path.join(output_dir, name) for name in REPORT_FILES}

    metrics_text = json.dumps(report.summary_dict(), indent=2, sort_keys=True) + "\n"
    labels_text = "label\n" + "".join(f"{int(y)}\n" for y in report.predicted_labels)
    histories_text = _histories_csv(report)

    _atomic_write(paths["metrics.json"], metrics_text)
    _atomic_write(paths["labels.csv"], labels_text)
    _atomic_write(paths["histories.csv"], histories_text)
    return paths
