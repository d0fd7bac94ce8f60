"""Measurement apparatus: sparsity, approximation error, modeled data
movement, the analytical runtime-delta model, and sparsity-mask export."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInput, InvalidInput


@dataclass(frozen=True)
class RunMetrics:
    engine: str
    intended_sparsity: float
    realized_sparsity: float
    mean_rel_l2_error: float
    fallback_count: int
    value_bytes_loaded: int
    value_bytes_full: int
    bytes_reduction_fraction: float
    steps: int


def realized_sparsity(retained, totals):
    """Mean over steps of the pruned fraction (totals - retained) / totals."""
    r = np.asarray(retained, dtype=np.float64)
    t = np.asarray(totals, dtype=np.float64)
    if r.size == 0 or r.shape != t.shape:
        raise InvalidInput("retained/totals must be equal-length and non-empty")
    if np.any(r > t) or np.any(t < 1):
        raise InvalidInput("retained counts exceed totals or totals < 1")
    return float(np.mean((t - r) / t))


def output_error(exact, approx):
    """Relative L2 error ||exact - approx|| / ||exact||."""
    e = np.asarray(exact, dtype=np.float64)
    a = np.asarray(approx, dtype=np.float64)
    if e.shape != a.shape:
        raise InvalidInput("exact/approx must have the same shape")
    norm = np.linalg.norm(e)
    if norm == 0.0:
        raise DegenerateInput("exact output has zero norm")
    return float(np.linalg.norm(e - a) / norm)


def value_bytes_loaded(retained_count, head_dim, bytes_per_element):
    """Modeled bytes moved for value-vector loads at one step.

    Keys are always fully loaded (scores are computed exactly before
    filtering), so only value loads scale with retention.
    """
    if retained_count < 0 or head_dim < 1 or bytes_per_element < 1:
        raise InvalidInput("counts must be non-negative, dims positive")
    return int(retained_count) * int(head_dim) * int(bytes_per_element)


def summarize_run(
    engine,
    intended_sparsity,
    retained_counts,
    total_keys,
    rel_errors,
    fallback_count,
    head_dim,
    bytes_per_element=2,
    step_range=None,
):
    """Aggregate per-step bookkeeping into RunMetrics.

    step_range is a 1-based inclusive (first, last) window; default all steps.
    The bytes-reduction fraction is the per-step mean of relative value-load
    reductions, which coincides with realized sparsity under the linear model.
    """
    r = np.asarray(retained_counts, dtype=np.int64)
    t = np.asarray(total_keys, dtype=np.int64)
    err = np.asarray(rel_errors, dtype=np.float64)
    if step_range is not None:
        lo, hi = step_range
        sel = slice(lo - 1, hi)
        r, t, err = r[sel], t[sel], err[sel]
    loaded = int(r.sum()) * head_dim * bytes_per_element
    full = int(t.sum()) * head_dim * bytes_per_element
    per_step_reduction = (
        t * head_dim * bytes_per_element - r * head_dim * bytes_per_element
    ) / (t * head_dim * bytes_per_element)
    return RunMetrics(
        engine=engine,
        intended_sparsity=intended_sparsity,
        realized_sparsity=realized_sparsity(r, t),
        mean_rel_l2_error=float(err.mean()),
        fallback_count=fallback_count,
        value_bytes_loaded=loaded,
        value_bytes_full=full,
        bytes_reduction_fraction=float(per_step_reduction.mean()),
        steps=len(r),
    )


# ---------------------------------------------------------------------------
# Analytical runtime delta vs. top-k


@dataclass(frozen=True)
class CostModelInputs:
    t_proj_v: float
    t_proj_v_pruned: float
    t_threshold: float
    t_topk: float
    t_powerlaw_fit: float
    s: int
    w: int

    def __post_init__(self):
        for name in (
            "t_proj_v",
            "t_proj_v_pruned",
            "t_threshold",
            "t_topk",
            "t_powerlaw_fit",
        ):
            if getattr(self, name) < 0:
                raise InvalidInput(f"{name} must be >= 0")
        if not (0 <= self.w <= self.s):
            raise InvalidInput(f"need 0 <= w <= s, got w={self.w}, s={self.s}")


@dataclass(frozen=True)
class CostModelDelta:
    full: float  # exact per-term accounting
    approx: float  # dominant-terms approximation (S - w)(t_threshold - t_topk)
    gap: float  # |full - approx| <= w * |t_proj_v - t_proj_v_pruned| + t_fit


def cost_model_delta(inputs):
    """Predicted runtime of the threshold engine minus top-k over S steps.

    full = w * (t_proj_v - t_proj_v_pruned)
         + (S - w) * (t_threshold - t_topk)
         + t_powerlaw_fit
    The approximation drops the warmup projection term and the one-time fit,
    which dominate nothing once w << S.
    """
    warm = inputs.w * (inputs.t_proj_v - inputs.t_proj_v_pruned)
    steady = (inputs.s - inputs.w) * (inputs.t_threshold - inputs.t_topk)
    full = warm + steady + inputs.t_powerlaw_fit
    return CostModelDelta(full=full, approx=steady, gap=abs(full - steady))


# ---------------------------------------------------------------------------
# Sparsity masks


def export_sparsity_mask(per_step_indices, total_steps, path):
    """Write a row-per-step 0/1 CSV mask; 1 = attended, future positions 0."""
    with open(path, "w", encoding="utf-8") as f:
        for step, indices in enumerate(per_step_indices, start=1):
            row = np.zeros(total_steps, dtype=np.int8)
            idx = np.asarray(indices, dtype=np.int64)
            if idx.size:
                if idx.min() < 0 or idx.max() >= step:
                    raise InvalidInput(
                        f"step {step}: retained index outside 0..{step - 1}"
                    )
                row[idx] = 1
            f.write(",".join(map(str, row.tolist())) + "\n")
