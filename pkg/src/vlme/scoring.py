"""Core classification math: temperature softmax over cosine similarities,
argmax prediction, and top-1 accuracy.

All computation is float64; argmax ties break to the lowest class index.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError


def stable_softmax(scores) -> np.ndarray:
    """Max-subtracted softmax of a score vector; output sums to 1."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValidationError(f"expected a nonempty 1-D score vector, got shape {s.shape}")
    if np.any(np.isnan(s)):
        raise ValidationError("NaN in softmax input")
    e = np.exp(s - np.max(s))
    return e / e.sum()


def softmax_rows(scores) -> np.ndarray:
    """Row-wise stable softmax of a 2-D score matrix."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2:
        raise ValidationError(f"expected a 2-D score matrix, got shape {s.shape}")
    if np.any(np.isnan(s)):
        raise ValidationError("NaN in softmax input")
    e = np.exp(s - s.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def l2_normalize_rows(x, what: str = "vector") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValidationError(f"zero-norm {what} row cannot be normalized")
    return x / norms


def probs_from_features(features, class_emb, tau: float) -> np.ndarray:
    """Class probabilities from image features and text embeddings.

    Row i is softmax(cos(f_i, c_.) / tau) with cosine taken on L2-normalized
    vectors. tau only sharpens or flattens rows; argmax is tau-invariant.
    """
    if tau <= 0:
        raise ValidationError(f"temperature must be > 0, got {tau}")
    f = l2_normalize_rows(features, "feature")
    c = l2_normalize_rows(class_emb, "class embedding")
    if f.shape[1] != c.shape[1]:
        raise ValidationError(f"feature dim {f.shape[1]} vs embedding dim {c.shape[1]}")
    cos = f @ c.T
    return softmax_rows(cos / tau)


def predict(scores) -> np.ndarray:
    """Argmax class per row; ties break to the lowest class index."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2:
        raise ValidationError(f"expected a 2-D score matrix, got shape {s.shape}")
    return np.argmax(s, axis=1)  # np.argmax returns the first (lowest) index on ties


def accuracy(scores, labels) -> float:
    """Fraction of rows whose argmax equals the label."""
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    s = np.asarray(scores, dtype=np.float64)
    if s.shape[0] != y.shape[0]:
        raise ValidationError(f"{s.shape[0]} score rows vs {y.shape[0]} labels")
    return float(np.mean(predict(s) == y))
