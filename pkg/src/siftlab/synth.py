"""Synthetic trace generation with known ground truth.

Two generators: a quantile series that lies on the power-law manifold up to
seeded multiplicative (lognormal) noise, and a full score trace whose rows are
softmaxes of seeded Gaussian logits (quantiles then decay with step count by
construction, since each row sums to one over a growing support).
"""

from dataclasses import dataclass

import numpy as np

from .core import softmax
from .errors import InvalidInput
from .powerlaw import QuantileSeries
from .tracefile import (
    FULL_SCORES,
    QUANTILES,
    AttentionTrace,
    TraceHeader,
)


@dataclass(frozen=True)
class SynthParams:
    alpha: float = 1.0
    beta: float = 0.5
    noise_sigma: float = 0.0  # lognormal sigma in log space
    steps: int = 1024
    seed: int = 0
    concentration: float = 1.0  # logit stddev for score-row generation

    def __post_init__(self):
        if self.alpha <= 0:
            raise InvalidInput(f"alpha must be > 0, got {self.alpha}")
        if self.noise_sigma < 0:
            raise InvalidInput("noise_sigma must be >= 0")
        if self.steps < 1:
            raise InvalidInput(f"steps must be >= 1, got {self.steps}")
        if self.concentration <= 0:
            raise InvalidInput("concentration must be > 0")


def generate_powerlaw_series(params, tau=0.5):
    """theta_i = alpha * i**(-beta) * exp(eps_i), eps_i ~ N(0, sigma^2)."""
    rng = np.random.default_rng(params.seed)
    steps = np.arange(1, params.steps + 1, dtype=np.float64)
    values = params.alpha * steps ** (-params.beta)
    if params.noise_sigma > 0:
        values = values * np.exp(
            rng.normal(0.0, params.noise_sigma, size=params.steps)
        )
    return QuantileSeries(tau=tau, values=values)


def generate_score_trace(params, model_name="synthetic", dataset="synthetic"):
    """FULL_SCORES trace: row i = softmax of i iid N(0, concentration^2) logits."""
    rng = np.random.default_rng(params.seed)
    records = []
    for i in range(1, params.steps + 1):
        logits = rng.normal(0.0, params.concentration, size=i)
        records.append(softmax(logits).astype("<f4"))
    header = TraceHeader(
        model_name=model_name,
        dataset=dataset,
        prompt_id=0,
        layer=0,
        head=0,
        num_steps=params.steps,
        record_kind=FULL_SCORES,
    )
    return AttentionTrace(header=header, records=records)


def generate_quantile_trace(
    params, taus, model_name="synthetic", dataset="synthetic"
):
    """QUANTILES trace holding one seeded power-law series per tau level."""
    columns = []
    for j, tau in enumerate(taus):
        p = SynthParams(
            alpha=params.alpha,
            beta=params.beta,
            noise_sigma=params.noise_sigma,
            steps=params.steps,
            seed=params.seed + j,
            concentration=params.concentration,
        )
        columns.append(generate_powerlaw_series(p, tau).values)
    records = [
        np.array([col[i] for col in columns], dtype="<f4")
        for i in range(params.steps)
    ]
    header = TraceHeader(
        model_name=model_name,
        dataset=dataset,
        prompt_id=0,
        layer=0,
        head=0,
        num_steps=params.steps,
        record_kind=QUANTILES,
        quantile_levels=list(taus),
    )
    return AttentionTrace(header=header, records=records)
