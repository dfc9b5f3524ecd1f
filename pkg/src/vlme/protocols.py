"""Evaluation protocols: zero-shot, base-to-new with harmonic mean,
cross-dataset, domain generalization, and multi-seed averaging.

Base/new splits assign the first ceil(K/2) class indices to base. k-shot
sampling is a pure function of (labels, k, seed). Default seeds are {1, 2, 3}.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import scoring, t_ensemble, tf_ensemble, zs_ensemble
from .data_model import DatasetManifest, subset_manifest
from .errors import ValidationError

log = logging.getLogger(__name__)

DEFAULT_SEEDS = (1, 2, 3)
DEFAULT_SHOTS = 16

STRATEGIES = ("zs", "tf", "tune", "mean", "caw_all")


@dataclass(frozen=True)
class ClassSplit:
    base_ids: tuple[int, ...]
    new_ids: tuple[int, ...]


@dataclass(frozen=True)
class ShotSample:
    indices: tuple[int, ...]
    shots_per_class: int
    seed: int


def base_new_split(k: int) -> ClassSplit:
    """First ceil(K/2) class indices are base, the rest are new."""
    if k < 2:
        raise ValidationError(f"need K >= 2, got {k}")
    n_base = math.ceil(k / 2)
    return ClassSplit(base_ids=tuple(range(n_base)), new_ids=tuple(range(n_base, k)))


def sample_k_shot(labels, base_ids, k: int, seed: int) -> ShotSample:
    """Seeded draw of min(k, available) sample indices per base class."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.Generator(np.random.Philox(seed))
    chosen = []
    for cls in sorted(base_ids):
        idx = np.flatnonzero(labels == cls)
        if idx.size == 0:
            log.warning("class %d has no samples; skipped in %d-shot draw", cls, k)
            continue
        take = min(k, idx.size)
        chosen.extend(int(i) for i in rng.choice(idx, size=take, replace=False))
    return ShotSample(indices=tuple(chosen), shots_per_class=k, seed=seed)


def harmonic_mean(base_acc: float, new_acc: float) -> float:
    """2ab/(a+b); unit-preserving (fractions or percent both work)."""
    if base_acc + new_acc == 0:
        raise ValidationError("harmonic mean undefined for a + b = 0")
    return 2.0 * base_acc * new_acc / (base_acc + new_acc)


@dataclass
class EvalReport:
    protocol: str
    per_dataset: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)
    averaged: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "per_dataset": self.per_dataset,
            "seeds": list(self.seeds),
            "averaged": self.averaged,
        }


def _strategy_scores(strategy: str, ds: DatasetManifest, fitted) -> np.ndarray:
    probs = ds.prob_list()
    if strategy == "zs":
        return zs_ensemble.zs_ensemble_predict(probs, ds.anchor_index)
    if strategy == "mean":
        return zs_ensemble.mean_ensemble_predict(probs)
    if strategy == "caw_all":
        return zs_ensemble.caw_all_predict(probs)
    if strategy == "tf":
        weak = [p for i, p in enumerate(probs) if i != ds.anchor_index]
        return tf_ensemble.tf_predict(fitted, weak, probs[ds.anchor_index])
    if strategy == "tune":
        params, config = fitted
        X = t_ensemble.build_inputs(ds, config)
        return t_ensemble.t_predict(params, config, X, probs, ds.anchor_index)
    raise ValidationError(f"unknown strategy '{strategy}'")


def _fit(strategy: str, train_ds: DatasetManifest, seed: int, grid=None,
         swig_options=None, train_options=None):
    if strategy in ("zs", "mean", "caw_all"):
        return None
    if strategy == "tf":
        probs = train_ds.prob_list()
        weak = [p for i, p in enumerate(probs) if i != train_ds.anchor_index]
        result = tf_ensemble.exhaustive_search(weak, probs[train_ds.anchor_index],
                                               train_ds.labels, grid=grid)
        return result.weights
    if strategy == "tune":
        swig_options = swig_options or {}
        input_type = swig_options.get("input_type", "features")
        anchor_fixed = bool(swig_options.get("anchor_fixed", False))
        downscale = int(swig_options.get("downscale", 32))
        if input_type == "logits":
            input_dim = len(train_ds.models) * train_ds.num_classes
        else:
            input_dim = sum(m.entry.feature_dim for m in train_ds.models)
        config = t_ensemble.SwigConfig(
            input_dim=input_dim,
            num_weight=t_ensemble.expected_num_weight(len(train_ds.models), anchor_fixed),
            downscale=downscale,
            input_type=input_type,
            anchor_fixed=anchor_fixed,
        )
        opts = dict(train_options or {})
        opts["seed"] = seed
        train_cfg = t_ensemble.TrainConfig(**opts)
        params, _ = t_ensemble.swig_train(train_ds, config, train_cfg)
        return params, config
    raise ValidationError(f"unknown strategy '{strategy}'")


def _check_same_classes(a: DatasetManifest, b: DatasetManifest) -> None:
    if a.num_classes != b.num_classes or a.class_names != b.class_names:
        raise ValidationError(
            f"class-space mismatch between {a.dataset_name} (K={a.num_classes}) "
            f"and {b.dataset_name} (K={b.num_classes})"
        )


def _mean_block(blocks: list[dict]) -> dict:
    keys = blocks[0].keys()
    return {k: float(np.mean([b[k] for b in blocks])) for k in keys}


def run_base_to_new(base_train: DatasetManifest, base_test: DatasetManifest,
                    new_test: DatasetManifest, strategy: str, seeds=DEFAULT_SEEDS,
                    shots: int = DEFAULT_SHOTS, grid=None, swig_options=None,
                    train_options=None) -> EvalReport:
    """Fit on a per-seed k-shot base split, evaluate base and new test sets."""
    if strategy not in STRATEGIES:
        raise ValidationError(f"strategy must be one of {STRATEGIES}")
    _check_same_classes(base_train, base_test)
    report = EvalReport(protocol="base_to_new", seeds=list(seeds))
    blocks = []
    for seed in seeds:
        if strategy in ("tf", "tune"):
            shot = sample_k_shot(base_train.labels, range(base_train.num_classes), shots, seed)
            fit_ds = subset_manifest(base_train, shot.indices)
            fitted = _fit(strategy, fit_ds, seed, grid=grid,
                          swig_options=swig_options, train_options=train_options)
        else:
            fitted = None
        base_acc = scoring.accuracy(_strategy_scores(strategy, base_test, fitted), base_test.labels)
        new_acc = scoring.accuracy(_strategy_scores(strategy, new_test, fitted), new_test.labels)
        blocks.append({"base_acc": base_acc, "new_acc": new_acc,
                       "hm": harmonic_mean(base_acc, new_acc)})
    report.per_dataset[base_test.dataset_name] = {"per_seed": blocks}
    report.averaged = _mean_block(blocks)
    return report


def run_zero_shot(datasets, strategy: str = "zs") -> EvalReport:
    """Accuracy of a fit-free strategy on each dataset's test set."""
    if strategy not in ("zs", "mean", "caw_all"):
        raise ValidationError("zero-shot protocol supports zs, mean, caw_all")
    report = EvalReport(protocol="zero_shot", seeds=[])
    accs = []
    for ds in datasets:
        acc = scoring.accuracy(_strategy_scores(strategy, ds, None), ds.labels)
        report.per_dataset[ds.dataset_name] = {"acc": acc}
        accs.append(acc)
    report.averaged = {"acc": float(np.mean(accs))}
    return report


def run_cross_dataset(strategy: str, fitted, targets) -> EvalReport:
    """Apply a source-fitted artifact to targets with disjoint label spaces."""
    if strategy == "tune":
        _, config = fitted
        if config.input_type == "logits":
            raise ValidationError(
                "logits-input weight generator cannot transfer across class counts; "
                "use features input for cross-dataset evaluation"
            )
    report = EvalReport(protocol="cross_dataset", seeds=[])
    accs = []
    for ds in targets:
        acc = scoring.accuracy(_strategy_scores(strategy, ds, fitted), ds.labels)
        report.per_dataset[ds.dataset_name] = {"acc": acc}
        accs.append(acc)
    report.averaged = {"acc": float(np.mean(accs))}
    return report


def run_domain_generalization(strategy: str, fitted, source: DatasetManifest,
                              variants) -> EvalReport:
    """Apply a source-fitted artifact to distribution-shifted variants."""
    for v in variants:
        _check_same_classes(source, v)
    report = run_cross_dataset(strategy, fitted, variants)
    report.protocol = "domain_generalization"
    return report
