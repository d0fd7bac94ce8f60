"""Shared numerical primitives: softmax, scaled dot-product scores, quantiles,
weighted sums.

All reductions accumulate in float64 regardless of input dtype so that the
brute-force oracles used in tests stay tight.
"""

import math

import numpy as np

from .errors import InvalidInput, ShapeError


def _as_vector(x, name="vector"):
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def softmax(logits):
    """Numerically stable softmax: exp(x - max) / sum(exp(x - max)).

    Raises InvalidInput on empty input or non-finite elements.
    """
    x = _as_vector(logits, "logits")
    if x.size == 0:
        raise InvalidInput("softmax of empty vector")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("softmax input contains NaN/Inf")
    shifted = x - x.max()
    e = np.exp(shifted)
    return e / e.sum()


def scaled_dot_scores(q, keys, head_dim):
    """Pre-softmax attention logits: keys @ q / sqrt(head_dim)."""
    q = _as_vector(q, "q")
    k = np.asarray(keys, dtype=np.float64)
    if k.ndim != 2:
        raise ShapeError(f"keys must be 2-D, got shape {k.shape}")
    if k.shape[0] < 1:
        raise ShapeError("keys must have at least one row")
    if q.shape[0] != head_dim or k.shape[1] != head_dim:
        raise ShapeError(
            f"dimension mismatch: q has {q.shape[0]}, keys have {k.shape[1]}, "
            f"head_dim is {head_dim}"
        )
    return k @ q / math.sqrt(head_dim)


def quantile(values, tau):
    """Linear-interpolation quantile between order statistics.

    Rank h = tau * (n - 1); returns v[floor(h)] + frac(h) * (v[ceil(h)] - v[floor(h)])
    on the sorted values. This is the fixed, reproducible definition used for
    every threshold in the toolkit.
    """
    v = _as_vector(values, "values")
    if v.size == 0:
        raise InvalidInput("quantile of empty vector")
    if not (0.0 <= tau <= 1.0):
        raise InvalidInput(f"tau must be in [0, 1], got {tau}")
    return float(np.quantile(v, tau, method="linear"))


def weighted_sum(scores, values):
    """Sum_i scores[i] * values.row(i), accumulated in float64."""
    s = _as_vector(scores, "scores")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ShapeError(f"values must be 2-D, got shape {v.shape}")
    if s.shape[0] != v.shape[0]:
        raise ShapeError(
            f"scores length {s.shape[0]} != values rows {v.shape[0]}"
        )
    return s @ v
