"""Run configuration: JSON on disk, dataclasses in memory.

Relative paths inside a config file resolve against the directory the file
lives in, so a generated dataset directory is self-contained.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from .assignment import DecHyper

METHODS = ("dec", "dmjc_s", "dmjc_t", "s_view", "s_all_views")
NORMALIZATIONS = ("unit_interval", "standardize", "none")
OPTIMIZERS = ("sgd_momentum", "adam", "adagrad")


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


@dataclass
class ViewConfig:
    feature_file: str
    encoder_dims: list[int]
    normalization: str = "unit_interval"
    name: str = ""


@dataclass
class PretrainSettings:
    epochs: int = 50
    batch_size: int = 256
    lr: float = 1e-3


@dataclass
class JointSettings:
    optimizer: str = "adagrad"
    lr: float = 0.01
    momentum: float = 0.9
    batch_size: int = 256
    max_epochs: int = 100


@dataclass
class HyperSettings:
    alpha: float = 1.0
    gamma: float = 2.0
    update_interval: int = 1
    label_change_tol: float = 0.001


@dataclass
class RunConfig:
    method: str
    k: int
    views: list[ViewConfig]
    hyper: HyperSettings = field(default_factory=HyperSettings)
    pretrain: PretrainSettings = field(default_factory=PretrainSettings)
    joint: JointSettings = field(default_factory=JointSettings)
    lam: float = 2.0e4
    seed: int = 0
    labels_file: str | None = None
    output_dir: str = "out"
    view_index: int = 0   # which view s_view / dec operate on

    def dec_hyper(self) -> DecHyper:
        return DecHyper(
            alpha=self.hyper.alpha,
            gamma=self.hyper.gamma,
            update_interval=self.hyper.update_interval,
            max_epochs=self.joint.max_epochs,
            label_change_tol=self.hyper.label_change_tol,
        )


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def validate(cfg: RunConfig, check_files: bool = True) -> None:
    _require(cfg.method in METHODS, f"unknown method {cfg.method!r}; expected one of {METHODS}")
    _require(cfg.k >= 1, f"k must be >= 1, got {cfg.k}")
    _require(len(cfg.views) >= 1, "need at least one view")
    _require(0 <= cfg.view_index < len(cfg.views),
             f"view_index {cfg.view_index} out of range for {len(cfg.views)} views")
    for i, view in enumerate(cfg.views):
        _require(len(view.encoder_dims) >= 2,
                 f"view {i}: encoder_dims needs at least input and embedding sizes")
        _require(all(d >= 1 for d in view.encoder_dims),
                 f"view {i}: encoder_dims must be positive")
        _require(view.normalization in NORMALIZATIONS,
                 f"view {i}: unknown normalization {view.normalization!r}")
        if check_files:
            _require(os.path.exists(view.feature_file),
                     f"view {i}: feature file not found: {view.feature_file}")
    _require(cfg.joint.optimizer in OPTIMIZERS,
             f"unknown joint optimizer {cfg.joint.optimizer!r}")
    _require(cfg.pretrain.epochs >= 1 and cfg.pretrain.batch_size >= 1,
             "pretrain epochs and batch_size must be >= 1")
    _require(cfg.joint.max_epochs >= 1 and cfg.joint.batch_size >= 1,
             "joint max_epochs and batch_size must be >= 1")
    _require(cfg.hyper.alpha > 0, f"alpha must be > 0, got {cfg.hyper.alpha}")
    _require(cfg.hyper.gamma > 1, f"gamma must be > 1, got {cfg.hyper.gamma}")
    _require(cfg.hyper.update_interval >= 1, "update_interval must be >= 1")
    _require(0.0 <= cfg.hyper.label_change_tol <= 1.0,
             "label_change_tol must be in [0, 1]")
    _require(cfg.lam >= 0, f"lambda must be >= 0, got {cfg.lam}")
    _require(cfg.pretrain.lr > 0 and cfg.joint.lr > 0, "learning rates must be > 0")
    if check_files and cfg.labels_file is not None:
        _require(os.path.exists(cfg.labels_file),
                 f"labels file not found: {cfg.labels_file}")


def _resolve(path: str | None, base_dir: str | None) -> str | None:
    if path is None or base_dir is None or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(base_dir, path))


def _pick(d: dict, cls, where: str):
    allowed = set(cls.__dataclass_fields__)
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return cls(**d)


def from_dict(raw: dict, base_dir: str | None = None, check_files: bool = True) -> RunConfig:
    raw = dict(raw)
    allowed = {
        "method", "k", "views", "hyper", "pretrain", "joint",
        "lambda", "seed", "labels_file", "output_dir", "view_index",
    }
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    for key in ("method", "k", "views"):
        if key not in raw:
            raise ConfigError(f"missing required config key {key!r}")
    try:
        views = [_pick(v, ViewConfig, f"views[{i}]") for i, v in enumerate(raw["views"])]
        cfg = RunConfig(
            method=raw["method"],
            k=int(raw["k"]),
            views=views,
            hyper=_pick(raw.get("hyper", {}), HyperSettings, "hyper"),
            pretrain=_pick(raw.get("pretrain", {}), PretrainSettings, "pretrain"),
            joint=_pick(raw.get("joint", {}), JointSettings, "joint"),
            lam=float(raw.get("lambda", 2.0e4)),
            seed=int(raw.get("seed", 0)),
            labels_file=raw.get("labels_file"),
            output_dir=raw.get("output_dir", "out"),
            view_index=int(raw.get("view_index", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    for view in cfg.views:
        view.feature_file = _resolve(view.feature_file, base_dir)
        view.encoder_dims = [int(d) for d in view.encoder_dims]
    cfg.labels_file = _resolve(cfg.labels_file, base_dir)
    cfg.output_dir = _resolve(cfg.output_dir, base_dir)
    validate(cfg, check_files=check_files)
    return cfg


def to_dict(cfg: RunConfig) -> dict:
    return {
        "method": cfg.method,
        "k": cfg.k,
        "views": [asdict(v) for v in cfg.views],
        "hyper": asdict(cfg.hyper),
        "pretrain": asdict(cfg.pretrain),
        "joint": asdict(cfg.joint),
        "lambda": cfg.lam,
        "seed": cfg.seed,
        "labels_file": cfg.labels_file,
        "output_dir": cfg.output_dir,
        "view_index": cfg.view_index,
    }


def load_config(path: str, check_files: bool = True) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)),
                     check_files=check_files)


def save_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
