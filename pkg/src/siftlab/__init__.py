"""Desk-scale laboratory for quantile-threshold sparse attention decoding."""

__version__ = "0.1.0"

from .core import quantile, scaled_dot_scores, softmax, weighted_sum
from .engines import (
    EvictConfig,
    EvictState,
    SiftConfig,
    SiftState,
    StepResult,
    TopKConfig,
    exact_step,
    topk_step,
)
from .kvcache import KvCache
from .powerlaw import (
    FitQuality,
    PowerLawFit,
    QuantileSeries,
    evaluate_warmup_fit,
    fit_power_law,
    predict_quantile,
    r_squared,
)
from .synth import SynthParams, generate_powerlaw_series, generate_score_trace
from .tracefile import AttentionTrace, TraceHeader, read_trace, write_trace
