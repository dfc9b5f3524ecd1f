"""Independent brute-force references kept deliberately separate from the
library code paths they check."""

import itertools

import numpy as np


def brute_force_search(weak_probs, anchor_probs, labels, grid):
    """Nested-loop argmax of fused accuracy over the full weight grid.

    Returns (best_weights, best_accuracy). Ties break to the first
    (lexicographically smallest) combination. Enumeration and scoring are
    written from scratch; only the per-combination row argmax is vectorized.
    """
    labels = np.asarray(labels)
    n = labels.size
    anchor = np.asarray(anchor_probs, dtype=float)
    best_weights = None
    best_correct = -1
    for combo in itertools.product(grid, repeat=len(weak_probs)):
        fused = anchor.copy()
        for w, p in zip(combo, weak_probs):
            fused = fused + w * np.asarray(p, dtype=float)
        correct = int(np.sum(fused.argmax(axis=1) == labels))
        if correct > best_correct:
            best_correct = correct
            best_weights = combo
    return tuple(best_weights), best_correct / n


def brute_force_search_scalar(weak_probs, anchor_probs, labels, grid):
    """Fully scalar variant of brute_force_search (slow; small inputs only)."""
    labels = np.asarray(labels)
    n = labels.size
    best_weights = None
    best_correct = -1
    for combo in itertools.product(grid, repeat=len(weak_probs)):
        correct = 0
        for s in range(n):
            row = anchor_probs[s].astype(float).copy()
            for w, p in zip(combo, weak_probs):
                row = row + w * p[s]
            pred = 0
            for j in range(1, row.size):
                if row[j] > row[pred]:
                    pred = j
            if pred == labels[s]:
                correct += 1
        if correct > best_correct:
            best_correct = correct
            best_weights = combo
    return tuple(best_weights), best_correct / n


def straight_line_swig_forward(W1, b1, W2, b2, x):
    """Scalar-loop reimplementation of the weight generator forward pass."""
    hidden = []
    for i in range(W1.shape[0]):
        acc = b1[i]
        for j in range(W1.shape[1]):
            acc += W1[i, j] * x[j]
        hidden.append(acc if acc > 0 else 0.0)
    out = []
    for i in range(W2.shape[0]):
        acc = b2[i]
        for j in range(W2.shape[1]):
            acc += W2[i, j] * hidden[j]
        out.append(acc)
    m = max(out)
    exps = [np.exp(o - m) for o in out]
    total = sum(exps)
    return np.array([e / total for e in exps])


def monotone_tf_fixture(n=100, k=2):
    """Search-set where fused accuracy increases monotonically in the single
    weak weight up to the grid maximum.

    The anchor is wrong on a block of samples with graded margins; the weak
    model is confidently right there, so each grid step flips more samples.
    """
    labels = np.zeros(n, dtype=np.int64)
    anchor = np.zeros((n, k))
    weak = np.zeros((n, k))
    for s in range(n):
        if s < 50:
            # anchor alone is right, weak agrees: always correct
            anchor[s] = [0.9, 0.1]
            weak[s] = [0.9, 0.1]
        else:
            # anchor wrong with margin growing in s; weak right at 1.0 vs 0.0.
            # fused class-0 score: 0.45 - margin/2 + w; class-1: 0.55 + margin/2.
            # sample s flips correct once w > margin + 0.1; thresholds sit
            # strictly between grid points so accuracy is monotone in w with
            # its maximum at w = 1.0.
            margin = 0.0165 * (s - 50) + 0.005
            anchor[s] = [0.45 - margin / 2, 0.55 + margin / 2]
            weak[s] = [1.0, 0.0]
    return weak, anchor, labels
