"""Tuning ensemble: a two-layer MLP weight generator that maps concatenated
per-sample inputs to fusion weights, trained with momentum SGD.

The generator's output passes through a softmax so per-sample weights are
positive and sum to 1. Input is either the concatenated image features of all
models or the concatenated probability rows. In anchor-fixed mode the
generator emits n-1 weights for the weak models and the anchor is added at
weight 1.0; the mixture is renormalized (row sum 2) before the likelihood.

Training: one warmup epoch at a constant small rate, then cosine decay from
the initial rate toward 0 over the remaining epochs. All randomness flows
from one seed through a Philox counter-based generator.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data_model import DatasetManifest, read_tensor, write_tensor
from .errors import ValidationError
from .scoring import softmax_rows

LOSS_CLAMP = 1e-12


@dataclass(frozen=True)
class SwigConfig:
    input_dim: int
    num_weight: int
    downscale: int = 32
    input_type: str = "features"  # "features" | "logits"
    anchor_fixed: bool = False

    def __post_init__(self):
        if self.input_type not in ("features", "logits"):
            raise ValidationError(f"input_type must be features|logits, got {self.input_type}")
        if self.input_dim < 1 or self.num_weight < 1 or self.downscale < 1:
            raise ValidationError("input_dim, num_weight, downscale must be >= 1")

    @property
    def hidden_dim(self) -> int:
        return max(1, self.input_dim // self.downscale)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "num_weight": self.num_weight,
            "downscale": self.downscale,
            "input_type": self.input_type,
            "anchor_fixed": self.anchor_fixed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SwigConfig":
        return cls(
            input_dim=int(d["input_dim"]),
            num_weight=int(d["num_weight"]),
            downscale=int(d["downscale"]),
            input_type=str(d["input_type"]),
            anchor_fixed=bool(d["anchor_fixed"]),
        )


@dataclass
class SwigParams:
    W1: np.ndarray  # (hidden, input_dim)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (num_weight, hidden)
    b2: np.ndarray  # (num_weight,)

    def names(self):
        return ("W1", "b1", "W2", "b2")

    def arrays(self):
        return (self.W1, self.b1, self.W2, self.b2)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 128
    initial_lr: float = 5e-3
    momentum: float = 0.9
    warmup_epochs: int = 1
    warmup_lr: float = 1e-5
    seed: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.initial_lr <= 0:
            raise ValidationError("initial_lr must be > 0")


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def swig_init(config: SwigConfig, seed: int) -> SwigParams:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    rng = _rng(seed)
    h, d, m = config.hidden_dim, config.input_dim, config.num_weight
    bound1 = 1.0 / math.sqrt(d)
    bound2 = 1.0 / math.sqrt(h)
    return SwigParams(
        W1=rng.uniform(-bound1, bound1, size=(h, d)),
        b1=np.zeros(h),
        W2=rng.uniform(-bound2, bound2, size=(m, h)),
        b2=np.zeros(m),
    )


def swig_forward(params: SwigParams, x) -> np.ndarray:
    """Weights for one sample: softmax(W2 relu(W1 x + b1) + b2)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != params.W1.shape[1]:
        raise ValidationError(f"input length {x.shape[0]} vs f_dim {params.W1.shape[1]}")
    return forward_batch(params, x[None, :])[0]


def forward_batch(params: SwigParams, X) -> np.ndarray:
    """Per-sample weight rows for a batch; each row sums to 1."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.W1.shape[1]:
        raise ValidationError(f"batch shape {X.shape} vs f_dim {params.W1.shape[1]}")
    H = np.maximum(0.0, X @ params.W1.T + params.b1)
    return softmax_rows(H @ params.W2.T + params.b2)


def build_inputs(ds: DatasetManifest, config: SwigConfig) -> np.ndarray:
    """Concatenated per-sample inputs in ascending model order."""
    if config.input_type == "logits":
        X = np.concatenate([m.probs for m in ds.models], axis=1)
    else:
        feats = []
        for m in ds.models:
            if m.features is None:
                raise ValidationError(f"model {m.entry.name} has no features (required in features mode)")
            feats.append(m.features)
        X = np.concatenate(feats, axis=1)
    if X.shape[1] != config.input_dim:
        raise ValidationError(f"manifest input dim {X.shape[1]} vs config input_dim {config.input_dim}")
    return X


def expected_num_weight(n_models: int, anchor_fixed: bool) -> int:
    return n_models - 1 if anchor_fixed else n_models


def _check_models(config: SwigConfig, prob_list, anchor_index: int):
    n = len(prob_list)
    if not 0 <= anchor_index < n:
        raise ValidationError(f"anchor_index {anchor_index} out of range")
    if config.num_weight != expected_num_weight(n, config.anchor_fixed):
        raise ValidationError(
            f"num_weight {config.num_weight} inconsistent with {n} models, anchor_fixed={config.anchor_fixed}"
        )


def t_predict(params: SwigParams, config: SwigConfig, X, prob_list, anchor_index: int) -> np.ndarray:
    """Fused scores with sample-aware weights.

    anchor_fixed off: convex mixture over all models (rows sum to 1).
    anchor_fixed on: weighted weak models plus the anchor (rows sum to 2).
    """
    _check_models(config, prob_list, anchor_index)
    W = forward_batch(params, X)  # (N, num_weight)
    if config.anchor_fixed:
        members = [p for i, p in enumerate(prob_list) if i != anchor_index]
    else:
        members = list(prob_list)
    fused = np.zeros_like(prob_list[0], dtype=np.float64)
    for i, p in enumerate(members):
        fused += W[:, i, None] * p
    if config.anchor_fixed:
        fused += prob_list[anchor_index]
    return fused


def _mixture(params, config, X, prob_list, anchor_index):
    """Row-stochastic mixture used by the likelihood (anchor mode divides by 2)."""
    fused = t_predict(params, config, X, prob_list, anchor_index)
    return fused / 2.0 if config.anchor_fixed else fused


def swig_loss(mixture_row, label: int) -> float:
    """Negative log-likelihood of the true class under the mixture."""
    return float(-np.log(max(float(mixture_row[label]), LOSS_CLAMP)))


def batch_loss(params, config, X, prob_list, labels, anchor_index) -> float:
    mix = _mixture(params, config, X, prob_list, anchor_index)
    y = np.asarray(labels, dtype=np.int64)
    p = np.maximum(mix[np.arange(y.size), y], LOSS_CLAMP)
    return float(-np.mean(np.log(p)))


def swig_backward(params: SwigParams, config: SwigConfig, X, prob_list, labels,
                  anchor_index: int) -> dict:
    """Mean-over-batch gradients of the likelihood loss w.r.t. the generator.

    Probability rows are constants; no gradient flows into the models.
    """
    _check_models(config, prob_list, anchor_index)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValidationError("empty batch")
    N = X.shape[0]
    scale = 2.0 if config.anchor_fixed else 1.0
    if config.anchor_fixed:
        members = [p for i, p in enumerate(prob_list) if i != anchor_index]
    else:
        members = list(prob_list)

    Hpre = X @ params.W1.T + params.b1
    H = np.maximum(0.0, Hpre)
    W = softmax_rows(H @ params.W2.T + params.b2)  # (N, m) mixture weights

    Py = np.stack([p[np.arange(N), y] for p in members], axis=1)  # (N, m)
    mix_y = (W * Py).sum(axis=1)
    if config.anchor_fixed:
        mix_y = mix_y + prob_list[anchor_index][np.arange(N), y]
    mix_y = mix_y / scale

    # dL/dweight_i = -P_i[y] / (scale * mixture[y]); zero where the clamp is active
    gW = np.where(mix_y[:, None] > LOSS_CLAMP, -Py / (scale * np.maximum(mix_y, LOSS_CLAMP))[:, None], 0.0)
    # softmax Jacobian: dL/do = W * (g - sum(W * g))
    dO = W * (gW - (W * gW).sum(axis=1, keepdims=True))

    dW2 = dO.T @ H / N
    db2 = dO.mean(axis=0)
    dH = dO @ params.W2
    dH[H <= 0] = 0.0
    dW1 = dH.T @ X / N
    db1 = dH.mean(axis=0)
    return {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


def epoch_lr(train_cfg: TrainConfig, epoch: int) -> float:
    """Learning rate for a 1-based epoch index."""
    if epoch <= train_cfg.warmup_epochs:
        return train_cfg.warmup_lr
    remaining = train_cfg.epochs - train_cfg.warmup_epochs
    if remaining <= 0:
        return train_cfg.warmup_lr
    i = epoch - train_cfg.warmup_epochs - 1
    return train_cfg.initial_lr * 0.5 * (1.0 + math.cos(math.pi * i / remaining))


def swig_train(ds: DatasetManifest, config: SwigConfig, train_cfg: TrainConfig):
    """Mini-batch momentum SGD; returns (params, per-epoch mean loss trace)."""
    X = build_inputs(ds, config)
    prob_list = ds.prob_list()
    _check_models(config, prob_list, ds.anchor_index)
    labels = ds.labels
    N = X.shape[0]
    if N == 0:
        raise ValidationError("empty training split")

    params = swig_init(config, train_cfg.seed)
    velocity = {name: np.zeros_like(a) for name, a in zip(params.names(), params.arrays())}
    shuffle_rng = _rng(train_cfg.seed + 1)

    trace = []
    for epoch in range(1, train_cfg.epochs + 1):
        lr = epoch_lr(train_cfg, epoch)
        perm = shuffle_rng.permutation(N)
        loss_sum = 0.0
        for start in range(0, N, train_cfg.batch_size):
            idx = perm[start : start + train_cfg.batch_size]
            Xb = X[idx]
            yb = labels[idx]
            pb = [p[idx] for p in prob_list]
            loss = batch_loss(params, config, Xb, pb, yb, ds.anchor_index)
            if not math.isfinite(loss):
                raise ValidationError(f"non-finite loss at epoch {epoch}, batch {start // train_cfg.batch_size}")
            loss_sum += loss * idx.size
            grads = swig_backward(params, config, Xb, pb, yb, ds.anchor_index)
            for name in params.names():
                velocity[name] = train_cfg.momentum * velocity[name] - lr * grads[name]
            params.W1 = params.W1 + velocity["W1"]
            params.b1 = params.b1 + velocity["b1"]
            params.W2 = params.W2 + velocity["W2"]
            params.b2 = params.b2 + velocity["b2"]
        trace.append(loss_sum / N)
    return params, trace


def save_params(directory, params: SwigParams, config: SwigConfig) -> None:
    """One tensor file per parameter plus a JSON config sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, arr in zip(params.names(), params.arrays()):
        write_tensor(directory / f"{name}.vet", arr.shape, arr.astype(np.float32))
    (directory / "swig_config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_params(directory) -> tuple[SwigParams, SwigConfig]:
    directory = Path(directory)
    config = SwigConfig.from_dict(json.loads((directory / "swig_config.json").read_text(encoding="utf-8")))
    arrays = {}
    for name in ("W1", "b1", "W2", "b2"):
        _, arr = read_tensor(directory / f"{name}.vet")
        arrays[name] = np.asarray(arr, dtype=np.float64)
    return SwigParams(**arrays), config
