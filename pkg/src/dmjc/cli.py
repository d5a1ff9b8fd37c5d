"""Command-line entry points.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
divergence during training.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import config as cfgmod
from .config import ConfigError, JointSettings, PretrainSettings, RunConfig, ViewConfig
from .data import (
    DataError,
    default_confusion_plan,
    load_labels,
    make_synthetic,
    save_labels,
    save_matrix_csv,
)
from .metrics import ari, clustering_accuracy, nmi
from .numerics import make_rng
from .pipeline import emit_report, run_pipeline
from .training import DivergenceError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmjc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a configured clustering run")
    run.add_argument("--config", required=True, help="path to a JSON run config")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--method", default=None, help="override the config method")
    run.add_argument("--max-epochs", type=int, default=None,
                     help="override the joint-stage epoch cap")

    synth = sub.add_parser("synth", help="generate a synthetic multi-view dataset")
    synth.add_argument("--views", type=int, required=True)
    synth.add_argument("--clusters", type=int, required=True)
    synth.add_argument("--n", type=int, required=True, help="samples per cluster")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--dim", type=int, default=8, help="features per view")
    synth.add_argument("--noise", type=float, default=1.0)
    synth.add_argument("--separation", type=float, default=10.0)

    ev = sub.add_parser("eval", help="score predicted labels against ground truth")
    ev.add_argument("--pred", required=True, help="predicted labels CSV")
    ev.add_argument("--truth", required=True, help="ground-truth labels CSV")
    return parser


def _cmd_run(args) -> int:
    cfg = cfgmod.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.method is not None:
        cfg.method = args.method
    if args.max_epochs is not None:
        cfg.joint.max_epochs = args.max_epochs
    cfgmod.validate(cfg)
    report = run_pipeline(cfg)
    paths = emit_report(report, cfg.output_dir)
    print(json.dumps({"report": report.summary_dict(), "files": paths},
                     indent=2, sort_keys=True))
    return 0


def _cmd_synth(args) -> int:
    rng = make_rng(args.seed)
    plan = default_confusion_plan(args.views, args.clusters)
    views, labels = make_synthetic(
        args.views, args.clusters, args.n, plan, rng,
        dim=args.dim, noise=args.noise, separation=args.separation,
    )
    os.makedirs(args.out, exist_ok=True)
    view_cfgs = []
    for i, x in enumerate(views):
        name = f"view_{i}.csv"
        save_matrix_csv(x, os.path.join(args.out, name))
        view_cfgs.append(ViewConfig(
            feature_file=name,
            encoder_dims=[args.dim, 8, 2],
            normalization="standardize",
            name=f"view-{i}",
        ))
    save_labels(labels, os.path.join(args.out, "labels.csv"))
    cfg = RunConfig(
        method="dmjc_s",
        k=args.clusters,
        views=view_cfgs,
        pretrain=PretrainSettings(epochs=60),
        joint=JointSettings(optimizer="adagrad", lr=0.1, max_epochs=50),
        seed=args.seed,
        labels_file="labels.csv",
        output_dir="out",
    )
    cfgmod.save_config(cfg, os.path.join(args.out, "config.json"))
    print(json.dumps({
        "out": args.out,
        "views": args.views,
        "clusters": args.clusters,
        "samples": int(labels.size),
        "config": os.path.join(args.out, "config.json"),
    }, indent=2, sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    pred = load_labels(args.pred)
    truth = load_labels(args.truth)
    if pred.size != truth.size:
        raise DataError(f"pred has {pred.size} labels, truth has {truth.size}")
    print(json.dumps({
        "acc": clustering_accuracy(pred, truth),
        "nmi": nmi(pred, truth),
        "ari": ari(pred, truth),
    }, indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "synth":
            return _cmd_synth(args)
        return _cmd_eval(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
