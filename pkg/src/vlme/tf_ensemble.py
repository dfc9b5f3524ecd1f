"""Training-free ensemble: search static weak-model weights that maximize
accuracy on a labeled search set, anchor fixed at weight 1.0.

Exhaustive enumeration is the default; coordinate-wise greedy ascent handles
spaces too large to enumerate. Ties break to the lexicographically smallest
weight vector so the result is independent of evaluation order and thread
count.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, ValidationError
from .scoring import accuracy

DEFAULT_GRID_SPEC = "0.1:1.0:0.1"
DEFAULT_BUDGET = 10**6


def parse_grid(spec: str) -> list[float]:
    """Parse a start:stop:step grid spec; step must divide the range."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid spec must be start:stop:step, got '{spec}'")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as e:
        raise ValidationError(f"non-numeric grid spec '{spec}'") from e
    if step <= 0 or stop < start:
        raise ValidationError(f"grid spec '{spec}' must have step > 0 and stop >= start")
    count = (stop - start) / step
    if abs(count - round(count)) > 1e-9:
        raise ValidationError(f"step {step} does not divide range [{start}, {stop}]")
    n = int(round(count)) + 1
    return [round(start + i * step, 12) for i in range(n)]


DEFAULT_GRID = parse_grid(DEFAULT_GRID_SPEC)


@dataclass(frozen=True)
class SearchResult:
    weights: tuple[float, ...]
    best_accuracy: float
    evaluated_count: int
    mode: str


def _stack(weak_probs, anchor_probs):
    if len(weak_probs) == 0:
        raise ValidationError("need at least one weak model")
    shape = anchor_probs.shape
    for i, p in enumerate(weak_probs):
        if p.shape != shape:
            raise ValidationError(f"weak model {i} shape {p.shape} vs anchor {shape}")
    return np.stack([np.asarray(p, dtype=np.float64) for p in weak_probs]), np.asarray(
        anchor_probs, dtype=np.float64
    )


def tf_predict(weights, weak_probs, anchor_probs) -> np.ndarray:
    """Fused scores: sum of weighted weak models plus the anchor at 1.0."""
    weak, anchor = _stack(weak_probs, anchor_probs)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (weak.shape[0],):
        raise ValidationError(f"{w.size} weights for {weak.shape[0]} weak models")
    fused = anchor.copy()
    for i in range(weak.shape[0]):  # ascending model index
        fused += w[i] * weak[i]
    return fused


def _eval_combo(combo, weak, anchor, labels) -> float:
    fused = np.tensordot(np.asarray(combo, dtype=np.float64), weak, axes=1) + anchor
    return accuracy(fused, labels)


def exhaustive_search(weak_probs, anchor_probs, labels, grid=None, budget=DEFAULT_BUDGET,
                      threads: int = 1) -> SearchResult:
    """Exact argmax of search-set accuracy over the full product grid.

    The reduction keeps (highest accuracy, lexicographically smallest weight
    vector), so the result is identical for any thread count.
    """
    grid = list(DEFAULT_GRID if grid is None else grid)
    if not grid:
        raise ValidationError("empty grid")
    weak, anchor = _stack(weak_probs, anchor_probs)
    m = weak.shape[0]
    total = len(grid) ** m
    if total > budget:
        raise BudgetExceededError(
            f"{total} grid points exceed budget {budget}; use coordinate_greedy instead"
        )
    labels = np.asarray(labels, dtype=np.int64)
    combos = list(itertools.product(grid, repeat=m))  # lexicographic order

    def best_in(chunk):
        best = None
        for combo in chunk:
            acc = _eval_combo(combo, weak, anchor, labels)
            if best is None or acc > best[0]:
                best = (acc, combo)
        return best

    if threads <= 1:
        best_acc, best_combo = best_in(combos)
    else:
        chunk_size = max(1, len(combos) // (threads * 4))
        chunks = [combos[i : i + chunk_size] for i in range(0, len(combos), chunk_size)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(best_in, chunks))
        # chunks are lex-ordered, so first chunk with the max accuracy holds the lex-min winner
        best_acc, best_combo = max(results, key=lambda r: r[0])
        for acc, combo in results:
            if acc == best_acc:
                best_acc, best_combo = acc, combo
                break
    return SearchResult(weights=tuple(best_combo), best_accuracy=best_acc,
                        evaluated_count=total, mode="exhaustive")


def coordinate_greedy(weak_probs, anchor_probs, labels, grid=None, sweeps: int = 10) -> SearchResult:
    """Coordinate-wise ascent over the grid, starting from the grid minimum.

    Optimizes one weight at a time (ascending model index) until a full sweep
    changes nothing or `sweeps` is exhausted; accuracy never decreases.
    """
    if sweeps < 1:
        raise ValidationError("sweeps must be >= 1")
    grid = list(DEFAULT_GRID if grid is None else grid)
    if not grid:
        raise ValidationError("empty grid")
    weak, anchor = _stack(weak_probs, anchor_probs)
    labels = np.asarray(labels, dtype=np.int64)
    m = weak.shape[0]
    current = [grid[0]] * m
    best_acc = _eval_combo(current, weak, anchor, labels)
    evaluated = 1
    for _ in range(sweeps):
        changed = False
        for i in range(m):
            best_val = current[i]
            for v in grid:
                trial = list(current)
                trial[i] = v
                acc = _eval_combo(trial, weak, anchor, labels)
                evaluated += 1
                if acc > best_acc or (acc == best_acc and v < best_val):
                    best_acc = acc
                    best_val = v
            if best_val != current[i]:
                current[i] = best_val
                changed = True
        if not changed:
            break
    return SearchResult(weights=tuple(current), best_accuracy=best_acc,
                        evaluated_count=evaluated, mode="coordinate_greedy")
