"""Decode-step strategies: exact attention, top-k, the two-phase
quantile-threshold engine, and a simplified heavy-hitter eviction baseline.

All engines share the same bookkeeping (StepResult) so the metrics layer can
treat them uniformly. The caller appends the current token's (k, v) pair via
the engine itself; the current token always participates in scoring.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import quantile, scaled_dot_scores, softmax, weighted_sum
from .errors import InvalidInput, InvalidState, PhaseError
from .kvcache import KvCache
from .powerlaw import PowerLawFit, QuantileSeries, fit_power_law, predict_quantile


@dataclass(frozen=True)
class StepResult:
    output: np.ndarray
    retained_indices: np.ndarray
    retained_count: int
    total_keys: int
    threshold_used: Optional[float] = None
    fallback_triggered: bool = False


@dataclass(frozen=True)
class SiftConfig:
    tau: float
    warmup_steps: int
    empty_filter_policy: str = "keep_argmax"  # or "return_zero"
    renormalize: bool = False

    def __post_init__(self):
        if not (0.0 <= self.tau < 1.0):
            raise InvalidInput(f"tau must be in [0, 1), got {self.tau}")
        if self.warmup_steps < 2:
            raise InvalidInput(
                f"warmup_steps must be >= 2, got {self.warmup_steps}"
            )
        if self.empty_filter_policy not in ("keep_argmax", "return_zero"):
            raise InvalidInput(
                f"unknown empty_filter_policy {self.empty_filter_policy!r}"
            )


@dataclass(frozen=True)
class TopKConfig:
    k_fraction: float

    def __post_init__(self):
        if not (0.0 < self.k_fraction <= 1.0):
            raise InvalidInput(
                f"k_fraction must be in (0, 1], got {self.k_fraction}"
            )


@dataclass(frozen=True)
class EvictConfig:
    budget_fraction: float
    recent_window_fraction: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.budget_fraction <= 1.0):
            raise InvalidInput(
                f"budget_fraction must be in (0, 1], got {self.budget_fraction}"
            )
        if not (0.0 <= self.recent_window_fraction <= 1.0):
            raise InvalidInput("recent_window_fraction must be in [0, 1]")
        if self.recent_window_fraction > self.budget_fraction:
            raise InvalidInput("recent window cannot exceed the budget")


# ---------------------------------------------------------------------------
# Shared selection/filtering primitives (also used by the trace replay driver)


def select_topk_indices(scores, k):
    """Indices of the k largest scores, ties broken by lower index first.

    Returned indices are sorted ascending.
    """
    order = np.argsort(-np.asarray(scores), kind="stable")
    return np.sort(order[:k])


def filter_above_threshold(scores, eta):
    """Indices with scores strictly above eta (ties at eta are dropped)."""
    return np.flatnonzero(np.asarray(scores) > eta)


def sparse_output(scores, values, indices, renormalize=False):
    """Attention output over a retained subset; no renormalization by default,
    so dropped probability mass is simply lost (the paper-faithful path)."""
    if len(indices) == 0:
        return np.zeros(values.shape[1], dtype=np.float64)
    kept = np.asarray(scores, dtype=np.float64)[indices]
    if renormalize:
        kept = kept / kept.sum()
    return weighted_sum(kept, values[indices])


# ---------------------------------------------------------------------------
# Exact and top-k


def exact_step(cache, q):
    """Full attention over the cache; returns the score row for instrumentation."""
    s = len(cache)
    if s == 0:
        raise InvalidState("exact_step on empty cache")
    scores = softmax(scaled_dot_scores(q, cache.keys, cache.head_dim))
    out = weighted_sum(scores, cache.values)
    result = StepResult(
        output=out,
        retained_indices=np.arange(s),
        retained_count=s,
        total_keys=s,
    )
    return result, scores


def topk_step(cache, q, cfg):
    """Retain the k = ceil(k_fraction * S) largest post-softmax scores.

    Retained scores are not renormalized, mirroring the threshold engine's
    unnormalized retention so error comparisons are apples-to-apples.
    """
    s = len(cache)
    if s == 0:
        raise InvalidState("topk_step on empty cache")
    scores = softmax(scaled_dot_scores(q, cache.keys, cache.head_dim))
    k = max(1, math.ceil(cfg.k_fraction * s))
    idx = select_topk_indices(scores, k)
    return StepResult(
        output=sparse_output(scores, cache.values, idx),
        retained_indices=idx,
        retained_count=len(idx),
        total_keys=s,
    )


# ---------------------------------------------------------------------------
# Two-phase quantile-threshold engine


class SiftState:
    """Per-head decode state for the two-phase threshold engine.

    Warmup phase (steps 1..w): exact attention, recording the tau-quantile of
    each score row. At step w the recorded series is fit with a closed-form
    log-log regression. Approximate phase (steps > w): scores below the
    predicted quantile eta_S = alpha * S**(-beta) are dropped before the value
    projection.

    Single writer; decode is inherently sequential per head.
    """

    def __init__(self, config, head_dim):
        self.config = config
        self.cache = KvCache(head_dim)
        self.quantile_values = []
        self.fit: Optional[PowerLawFit] = None

    @property
    def step(self):
        return len(self.cache)

    def quantile_series(self):
        return QuantileSeries(
            tau=self.config.tau, values=np.array(self.quantile_values)
        )

    def warmup_step(self, q, k, v):
        if self.step >= self.config.warmup_steps:
            raise PhaseError(
                f"warmup_step at step {self.step + 1} but warmup is "
                f"{self.config.warmup_steps}"
            )
        self.cache.append(k, v)
        result, scores = exact_step(self.cache, q)
        self.quantile_values.append(quantile(scores, self.config.tau))
        if self.step == self.config.warmup_steps:
            self.finalize_warmup()
        return result

    def finalize_warmup(self):
        if self.step != self.config.warmup_steps:
            raise PhaseError(
                f"finalize_warmup at step {self.step}, expected "
                f"{self.config.warmup_steps}"
            )
        self.fit = fit_power_law(self.quantile_series())
        return self.fit

    def approx_step(self, q, k, v):
        if self.fit is None:
            raise PhaseError("approx_step before warmup fit is available")
        self.cache.append(k, v)
        s = self.step
        scores = softmax(scaled_dot_scores(q, self.cache.keys, self.cache.head_dim))
        eta = predict_quantile(self.fit, s)
        idx = filter_above_threshold(scores, eta)
        fallback = False
        if len(idx) == 0:
            if self.config.empty_filter_policy == "keep_argmax":
                idx = np.array([int(np.argmax(scores))])
                fallback = True
            # return_zero: idx stays empty, output is the zero vector
        out = sparse_output(
            scores, self.cache.values, idx, self.config.renormalize
        )
        return StepResult(
            output=out,
            retained_indices=idx,
            retained_count=len(idx),
            total_keys=s,
            threshold_used=eta,
            fallback_triggered=fallback,
        )


# ---------------------------------------------------------------------------
# Heavy-hitter eviction baseline (simplified; not a faithful H2O port)


class EvictState:
    """Persistent-eviction baseline: keeps ceil(budget * S) tokens alive,
    chosen as a recency window plus the highest accumulated-score survivors.
    Evicted tokens never return; attention renormalizes over survivors."""

    def __init__(self, config, head_dim):
        self.config = config
        self.cache = KvCache(head_dim)
        self.alive = []
        self.accumulated = []

    def step(self, q, k, v):
        self.cache.append(k, v)
        s = len(self.cache)
        self.alive.append(s - 1)
        self.accumulated.append(0.0)

        budget = math.ceil(self.config.budget_fraction * s)
        if budget < 1:
            raise InvalidInput("eviction budget must be at least one token")
        if len(self.alive) > budget:
            n_recent = min(
                math.ceil(self.config.recent_window_fraction * s), budget
            )
            n_recent = max(n_recent, 1)  # the new token is never evicted
            recent = self.alive[-n_recent:]
            older = self.alive[:-n_recent]
            n_heavy = budget - n_recent
            # highest accumulated score first, ties to the lower index
            older_sorted = sorted(
                older, key=lambda i: (-self.accumulated[i], i)
            )
            self.alive = sorted(older_sorted[:n_heavy] + recent)

        idx = np.array(self.alive, dtype=np.int64)
        scores = softmax(
            scaled_dot_scores(q, self.cache.keys[idx], self.cache.head_dim)
        )
        out = weighted_sum(scores, self.cache.values[idx])
        for j, i in enumerate(self.alive):
            self.accumulated[i] += float(scores[j])
        return StepResult(
            output=out,
            retained_indices=idx,
            retained_count=len(idx),
            total_keys=s,
        )
