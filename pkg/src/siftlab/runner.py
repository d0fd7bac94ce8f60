"""Replay driver: feed one score trace through the decode engines with
identical inputs and collect per-step bookkeeping for the metrics layer.

Replay works on post-softmax score rows (from a FULL_SCORES trace file or the
synthetic generator) plus a seeded synthetic value matrix, so every engine
sees exactly the same attention distribution. The exact output per step is
the full weighted sum; engine outputs differ only through their retention
rule, which reuses the same selection primitives as the live engines.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import quantile
from .engines import (
    filter_above_threshold,
    select_topk_indices,
    sparse_output,
)
from .errors import InvalidInput
from .metrics import output_error, summarize_run
from .powerlaw import QuantileSeries, fit_power_law, predict_quantile
from .tracefile import FULL_SCORES


@dataclass(frozen=True)
class EngineSpec:
    """One engine configuration for a comparison run.

    kind: "full" | "topk" | "sift" | "evict"
    threshold_mode "fit" predicts eta_S from the warmup power-law fit;
    "oracle" thresholds each step at the exact tau-quantile of its own score
    row (ground-truth sparsity reference, no warmup needed).
    """

    kind: str
    tau: float = 0.5
    warmup_steps: int = 64
    k_fraction: float = 0.5
    budget_fraction: float = 0.5
    recent_window_fraction: float = 0.1
    empty_filter_policy: str = "keep_argmax"
    renormalize: bool = False
    threshold_mode: str = "fit"

    def label(self):
        if self.kind == "full":
            return "full"
        if self.kind == "topk":
            return f"topk(k={self.k_fraction})"
        if self.kind == "sift":
            return f"sift(tau={self.tau},w={self.warmup_steps},{self.threshold_mode})"
        if self.kind == "evict":
            return f"evict(b={self.budget_fraction},r={self.recent_window_fraction})"
        raise InvalidInput(f"unknown engine kind {self.kind!r}")

    def intended_sparsity(self):
        if self.kind == "full":
            return 0.0
        if self.kind == "topk":
            return 1.0 - self.k_fraction
        if self.kind == "sift":
            return self.tau
        return 1.0 - self.budget_fraction


@dataclass
class ReplayResult:
    spec: EngineSpec
    retained_counts: List[int]
    total_keys: List[int]
    rel_errors: List[float]
    fallback_count: int
    thresholds: List[Optional[float]]
    retained_indices: Optional[List[np.ndarray]] = None

    def metrics(self, head_dim, bytes_per_element=2, step_range=None):
        return summarize_run(
            engine=self.spec.label(),
            intended_sparsity=self.spec.intended_sparsity(),
            retained_counts=self.retained_counts,
            total_keys=self.total_keys,
            rel_errors=self.rel_errors,
            fallback_count=self.fallback_count,
            head_dim=head_dim,
            bytes_per_element=bytes_per_element,
            step_range=step_range,
        )


def score_rows_from_trace(trace):
    if trace.header.record_kind != FULL_SCORES:
        raise InvalidInput("replay needs a FULL_SCORES trace")
    return [np.asarray(r, dtype=np.float64) for r in trace.records]


def synth_value_matrix(steps, head_dim, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0, size=(steps, head_dim))


def replay(rows, values, spec, collect_masks=False):
    """Run one engine over precomputed score rows.

    rows[i] is the post-softmax score row of step i+1 (length i+1); values is
    the (steps x D) synthetic value matrix shared by all engines in a run.
    """
    steps = len(rows)
    if values.shape[0] < steps:
        raise InvalidInput("value matrix shorter than the trace")
    if (
        spec.kind == "sift"
        and spec.threshold_mode == "fit"
        and steps <= spec.warmup_steps
    ):
        raise InvalidInput(
            f"trace has {steps} steps, not beyond warmup {spec.warmup_steps}"
        )

    retained_counts, total_keys, rel_errors, thresholds = [], [], [], []
    masks = [] if collect_masks else None
    fallback_count = 0

    # sift bookkeeping
    warm_quantiles = []
    fit = None
    # evict bookkeeping
    alive: List[int] = []
    accumulated: List[float] = []

    for step in range(1, steps + 1):
        row = rows[step - 1]
        v = values[:step]
        exact_out = row @ v
        eta = None
        fallback = False

        if spec.kind == "full":
            idx = np.arange(step)
            out = exact_out
        elif spec.kind == "topk":
            k = max(1, math.ceil(spec.k_fraction * step))
            idx = select_topk_indices(row, k)
            out = sparse_output(row, v, idx, spec.renormalize)
        elif spec.kind == "sift":
            if spec.threshold_mode == "oracle":
                eta = quantile(row, spec.tau)
            elif step <= spec.warmup_steps:
                warm_quantiles.append(quantile(row, spec.tau))
                if step == spec.warmup_steps:
                    fit = fit_power_law(
                        QuantileSeries(tau=spec.tau, values=np.array(warm_quantiles))
                    )
                idx = np.arange(step)
                out = exact_out
            else:
                if fit is None:
                    raise InvalidInput(
                        f"trace shorter than warmup ({spec.warmup_steps})"
                    )
                eta = predict_quantile(fit, step)
            if eta is not None:
                idx = filter_above_threshold(row, eta)
                if len(idx) == 0:
                    if spec.empty_filter_policy == "keep_argmax":
                        idx = np.array([int(np.argmax(row))])
                        fallback = True
                out = sparse_output(row, v, idx, spec.renormalize)
        elif spec.kind == "evict":
            alive.append(step - 1)
            accumulated.append(0.0)
            budget = math.ceil(spec.budget_fraction * step)
            if len(alive) > budget:
                n_recent = max(
                    1, min(math.ceil(spec.recent_window_fraction * step), budget)
                )
                recent = alive[-n_recent:]
                older = sorted(
                    alive[:-n_recent], key=lambda i: (-accumulated[i], i)
                )
                alive = sorted(older[: budget - n_recent] + recent)
            idx = np.array(alive, dtype=np.int64)
            # renormalizing the surviving scores equals a softmax over the
            # surviving logits, matching the live eviction engine
            kept = row[idx] / row[idx].sum()
            out = kept @ v[idx]
            for j, i in enumerate(alive):
                accumulated[i] += float(kept[j])
        else:
            raise InvalidInput(f"unknown engine kind {spec.kind!r}")

        retained_counts.append(len(idx))
        total_keys.append(step)
        rel_errors.append(output_error(exact_out, out))
        thresholds.append(eta)
        fallback_count += int(fallback)
        if collect_masks:
            masks.append(np.asarray(idx, dtype=np.int64))

    return ReplayResult(
        spec=spec,
        retained_counts=retained_counts,
        total_keys=total_keys,
        rel_errors=rel_errors,
        fallback_count=fallback_count,
        thresholds=thresholds,
        retained_indices=masks,
    )


def compare(rows, specs, head_dim, seed=0, bytes_per_element=2, step_range=None):
    """Replay several engines over the same rows and summarize each."""
    steps = len(rows)
    values = synth_value_matrix(steps, head_dim, seed)
    results = []
    for spec in specs:
        res = replay(rows, values, spec)
        results.append(
            (res, res.metrics(head_dim, bytes_per_element, step_range))
        )
    return results
