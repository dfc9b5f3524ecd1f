"""Zero-shot ensemble: confidence-aware weighting of weak models with the
anchor fixed at weight 1.0, plus the mean baseline and the all-model
confidence-weighted variant.

Fused outputs are unnormalized scores (anchored fusion rows sum to 2 by
construction); accuracy operates on argmax directly.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .scoring import softmax_rows


def _check_shapes(prob_list) -> tuple[int, int]:
    if not prob_list:
        raise ValidationError("no probability matrices given")
    shape = prob_list[0].shape
    for i, p in enumerate(prob_list):
        if p.ndim != 2 or p.shape != shape:
            raise ValidationError(f"matrix {i} shape {p.shape} differs from {shape}")
    return shape


def confidence_weights(weak_probs) -> np.ndarray:
    """Per-sample softmax over each weak model's maximum class probability.

    Returns an (N, m) matrix whose rows sum to 1.
    """
    _check_shapes(weak_probs)
    maxp = np.stack([p.max(axis=1) for p in weak_probs], axis=1)  # (N, m)
    return softmax_rows(maxp)


def zs_ensemble_predict(prob_list, anchor_index: int) -> np.ndarray:
    """Confidence-weighted sum of weak models plus the anchor at weight 1.0.

    Each fused row sums to 2 (weak mixture is convex, anchor adds 1); rows
    are scores, not probabilities.
    """
    _check_shapes(prob_list)
    n = len(prob_list)
    if n < 2:
        raise ValidationError(f"need at least 2 models, got {n}")
    if not 0 <= anchor_index < n:
        raise ValidationError(f"anchor_index {anchor_index} out of range for {n} models")
    weak = [p for i, p in enumerate(prob_list) if i != anchor_index]
    w = confidence_weights(weak)
    fused = np.zeros_like(prob_list[0], dtype=np.float64)
    for i, p in enumerate(weak):  # ascending model index for deterministic accumulation
        fused += w[:, i, None] * p
    return fused + prob_list[anchor_index]


def mean_ensemble_predict(prob_list) -> np.ndarray:
    """Elementwise average of the probability matrices."""
    _check_shapes(prob_list)
    if len(prob_list) < 2:
        raise ValidationError("mean ensemble needs at least 2 models")
    fused = np.zeros_like(prob_list[0], dtype=np.float64)
    for p in prob_list:
        fused += p
    return fused / len(prob_list)


def caw_all_predict(prob_list) -> np.ndarray:
    """Confidence-aware weighting over all models, no anchor exemption."""
    _check_shapes(prob_list)
    if len(prob_list) < 2:
        raise ValidationError("confidence-weighted ensemble needs at least 2 models")
    w = confidence_weights(prob_list)
    fused = np.zeros_like(prob_list[0], dtype=np.float64)
    for i, p in enumerate(prob_list):
        fused += w[:, i, None] * p
    return fused
