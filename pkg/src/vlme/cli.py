"""Command-line entry point.

Every report embeds the kit version, the reproducibility-relevant command
line (execution-environment flags --threads/--out excluded), seeds, and
SHA-256 digests of all referenced manifests; re-running the embedded command
reproduces the report bit-for-bit on one platform.

Exit codes: 0 success, 2 validation error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, protocols, scoring, t_ensemble, tf_ensemble, zs_ensemble
from .data_model import load_manifest
from .errors import ValidationError

ENV_THREADS = "VLME_THREADS"
REPRO_EXCLUDED_FLAGS = {"--threads", "--out"}


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _repro_argv(argv) -> list[str]:
    out = []
    skip = False
    for arg in argv:
        if skip:
            skip = False
            continue
        flag = arg.split("=", 1)[0]
        if flag in REPRO_EXCLUDED_FLAGS:
            skip = "=" not in arg
            continue
        out.append(arg)
    return out


def _emit(report: dict, out_path) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _base_report(argv, manifests, seeds=()) -> dict:
    return {
        "kit_version": __version__,
        "command": _repro_argv(argv),
        "seeds": list(seeds),
        "manifest_digests": {str(p): _digest(p) for p in manifests},
    }


def _add_common(p):
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker thread cap (default: ${ENV_THREADS} or 1)")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get(ENV_THREADS, "1")))


def _parse_weights(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as e:
        raise ValidationError(f"bad --weights '{text}'") from e


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vlme", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    for name, help_ in (("zs", "confidence-weighted zero-shot ensemble"),
                        ("mean", "mean ensemble baseline"),
                        ("caw-all", "confidence weighting over all models")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--manifest", required=True)
        _add_common(p)

    p = sub.add_parser("tf-search", help="grid-search static fusion weights")
    p.add_argument("--manifest", required=True, help="labeled search-set manifest")
    p.add_argument("--grid", default=tf_ensemble.DEFAULT_GRID_SPEC)
    p.add_argument("--mode", choices=["exhaustive", "coordinate_greedy"], default="exhaustive")
    p.add_argument("--sweeps", type=int, default=10)
    p.add_argument("--budget", type=int, default=tf_ensemble.DEFAULT_BUDGET)
    _add_common(p)

    p = sub.add_parser("tf-eval", help="evaluate fixed static weights")
    p.add_argument("--manifest", required=True)
    p.add_argument("--weights", required=True, help="comma-separated weak-model weights")
    _add_common(p)

    p = sub.add_parser("tune", help="train the sample-aware weight generator")
    p.add_argument("--manifest", required=True, help="training-split manifest")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch", type=int, default=128)
    p.add_argument("--lr", type=float, default=5e-3)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--input-type", choices=["features", "logits"], default="features")
    p.add_argument("--anchor-fixed", action="store_true")
    p.add_argument("--downscale", type=int, default=32)
    p.add_argument("--params-out", required=True, help="directory for trained parameters")
    _add_common(p)

    p = sub.add_parser("t-eval", help="evaluate trained sample-aware weights")
    p.add_argument("--manifest", required=True)
    p.add_argument("--params", required=True, help="directory written by tune")
    _add_common(p)

    p = sub.add_parser("protocol", help="run an evaluation protocol")
    p.add_argument("--protocol", choices=["base-to-new", "cross-dataset", "domain-gen"],
                   required=True)
    p.add_argument("--strategy", choices=list(protocols.STRATEGIES), required=True)
    p.add_argument("--base-train")
    p.add_argument("--base-test")
    p.add_argument("--new-test")
    p.add_argument("--source")
    p.add_argument("--targets", nargs="*", default=[])
    p.add_argument("--seeds", default="1,2,3")
    p.add_argument("--shots", type=int, default=16)
    p.add_argument("--grid", default=tf_ensemble.DEFAULT_GRID_SPEC)
    p.add_argument("--weights", help="static weights for tf on cross-dataset/domain-gen")
    p.add_argument("--params", help="trained parameter directory for tune")
    p.add_argument("--input-type", choices=["features", "logits"], default="features")
    p.add_argument("--anchor-fixed", action="store_true")
    _add_common(p)

    p = sub.add_parser("inspect", help="summarize a manifest")
    p.add_argument("--manifest", required=True)
    _add_common(p)
    return ap


def _cmd_fuse(args, argv) -> dict:
    ds = load_manifest(args.manifest)
    probs = ds.prob_list()
    if args.command == "zs":
        fused = zs_ensemble.zs_ensemble_predict(probs, ds.anchor_index)
    elif args.command == "mean":
        fused = zs_ensemble.mean_ensemble_predict(probs)
    else:
        fused = zs_ensemble.caw_all_predict(probs)
    report = _base_report(argv, [args.manifest])
    report["effective_config"] = {"strategy": args.command, "manifest": args.manifest}
    report["results"] = {ds.dataset_name: {"acc": scoring.accuracy(fused, ds.labels)}}
    return report


def _cmd_tf_search(args, argv) -> dict:
    ds = load_manifest(args.manifest)
    probs = ds.prob_list()
    weak = [p for i, p in enumerate(probs) if i != ds.anchor_index]
    grid = tf_ensemble.parse_grid(args.grid)
    if args.mode == "exhaustive":
        result = tf_ensemble.exhaustive_search(weak, probs[ds.anchor_index], ds.labels,
                                               grid=grid, budget=args.budget,
                                               threads=_threads(args))
    else:
        result = tf_ensemble.coordinate_greedy(weak, probs[ds.anchor_index], ds.labels,
                                               grid=grid, sweeps=args.sweeps)
    report = _base_report(argv, [args.manifest])
    report["effective_config"] = {"strategy": "tf-search", "grid": args.grid,
                                  "mode": args.mode, "budget": args.budget}
    report["results"] = {
        "weights": list(result.weights),
        "best_accuracy": result.best_accuracy,
        "evaluated_count": result.evaluated_count,
        "mode": result.mode,
    }
    return report


def _cmd_tf_eval(args, argv) -> dict:
    ds = load_manifest(args.manifest)
    probs = ds.prob_list()
    weak = [p for i, p in enumerate(probs) if i != ds.anchor_index]
    weights = _parse_weights(args.weights)
    fused = tf_ensemble.tf_predict(weights, weak, probs[ds.anchor_index])
    report = _base_report(argv, [args.manifest])
    report["effective_config"] = {"strategy": "tf-eval", "weights": list(weights)}
    report["results"] = {ds.dataset_name: {"acc": scoring.accuracy(fused, ds.labels)}}
    return report


def _cmd_tune(args, argv) -> dict:
    ds = load_manifest(args.manifest)
    if args.input_type == "logits":
        input_dim = len(ds.models) * ds.num_classes
    else:
        input_dim = sum(m.entry.feature_dim for m in ds.models)
    config = t_ensemble.SwigConfig(
        input_dim=input_dim,
        num_weight=t_ensemble.expected_num_weight(len(ds.models), args.anchor_fixed),
        downscale=args.downscale,
        input_type=args.input_type,
        anchor_fixed=args.anchor_fixed,
    )
    train_cfg = t_ensemble.TrainConfig(epochs=args.epochs, batch_size=args.batch,
                                       initial_lr=args.lr, seed=args.seed)
    params, trace = t_ensemble.swig_train(ds, config, train_cfg)
    t_ensemble.save_params(args.params_out, params, config)
    report = _base_report(argv, [args.manifest], seeds=[args.seed])
    report["effective_config"] = {
        "strategy": "tune", "epochs": args.epochs, "batch_size": args.batch,
        "initial_lr": args.lr, "momentum": train_cfg.momentum,
        "warmup_epochs": train_cfg.warmup_epochs, "warmup_lr": train_cfg.warmup_lr,
        "seed": args.seed, **config.to_dict(),
    }
    report["results"] = {"loss_trace": trace, "params_dir": args.params_out}
    return report


def _cmd_t_eval(args, argv) -> dict:
    ds = load_manifest(args.manifest)
    params, config = t_ensemble.load_params(args.params)
    X = t_ensemble.build_inputs(ds, config)
    fused = t_ensemble.t_predict(params, config, X, ds.prob_list(), ds.anchor_index)
    report = _base_report(argv, [args.manifest])
    report["effective_config"] = {"strategy": "t-eval", **config.to_dict()}
    report["results"] = {ds.dataset_name: {"acc": scoring.accuracy(fused, ds.labels)}}
    return report


def _cmd_protocol(args, argv) -> dict:
    seeds = [int(s) for s in args.seeds.split(",")]
    grid = tf_ensemble.parse_grid(args.grid)
    manifests = []
    if args.protocol == "base-to-new":
        for flag, val in (("--base-train", args.base_train), ("--base-test", args.base_test),
                          ("--new-test", args.new_test)):
            if not val:
                raise ValidationError(f"base-to-new requires {flag}")
        manifests = [args.base_train, args.base_test, args.new_test]
        rep = protocols.run_base_to_new(
            load_manifest(args.base_train), load_manifest(args.base_test),
            load_manifest(args.new_test), args.strategy, seeds=seeds, shots=args.shots,
            grid=grid,
            swig_options={"input_type": args.input_type, "anchor_fixed": args.anchor_fixed},
        )
    else:
        if not args.targets:
            raise ValidationError("cross-dataset/domain-gen requires --targets")
        fitted = None
        if args.strategy == "tf":
            if not args.weights:
                raise ValidationError("tf strategy requires --weights")
            fitted = _parse_weights(args.weights)
        elif args.strategy == "tune":
            if not args.params:
                raise ValidationError("tune strategy requires --params")
            fitted = t_ensemble.load_params(args.params)
            fitted = (fitted[0], fitted[1])
        targets = [load_manifest(t) for t in args.targets]
        manifests = list(args.targets)
        if args.protocol == "domain-gen":
            if not args.source:
                raise ValidationError("domain-gen requires --source")
            manifests.append(args.source)
            rep = protocols.run_domain_generalization(args.strategy, fitted,
                                                      load_manifest(args.source), targets)
        else:
            rep = protocols.run_cross_dataset(args.strategy, fitted, targets)
    report = _base_report(argv, manifests, seeds=seeds if args.protocol == "base-to-new" else [])
    report["effective_config"] = {"protocol": args.protocol, "strategy": args.strategy,
                                  "shots": args.shots, "grid": args.grid}
    report["results"] = rep.to_dict()
    return report


def _cmd_inspect(args, argv) -> dict:
    ds = load_manifest(args.manifest)
    models = []
    for m in ds.models:
        models.append({
            "name": m.entry.name,
            "source": "features" if m.entry.is_feature_source else "probs",
            "feature_dim": m.entry.feature_dim if m.entry.is_feature_source else None,
            "acc": scoring.accuracy(m.probs, ds.labels),
        })
    report = _base_report(argv, [args.manifest])
    report["effective_config"] = {"strategy": "inspect"}
    report["results"] = {
        "dataset_name": ds.dataset_name,
        "num_samples": ds.num_samples,
        "num_classes": ds.num_classes,
        "anchor_index": ds.anchor_index,
        "models": models,
    }
    return report


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "zs": _cmd_fuse, "mean": _cmd_fuse, "caw-all": _cmd_fuse,
        "tf-search": _cmd_tf_search, "tf-eval": _cmd_tf_eval,
        "tune": _cmd_tune, "t-eval": _cmd_t_eval,
        "protocol": _cmd_protocol, "inspect": _cmd_inspect,
    }
    try:
        report = handlers[args.command](args, argv)
        _emit(report, args.out)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
