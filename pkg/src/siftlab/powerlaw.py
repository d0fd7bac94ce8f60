"""Power-law modeling of quantile series: closed-form log-log regression,
threshold prediction, and fit-quality evaluation.

The model is theta_i ~ alpha * i ** (-beta). Taking logs gives
log(theta_i) = log(alpha) - beta * log(i), so ordinary least squares on
(log i, log theta) recovers the parameters in closed form; no iterative
optimization anywhere. Step indices are 1-based (log of step 0 is undefined).
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVariance, InvalidInput

# Floor applied before taking logs. Post-softmax quantiles are positive by
# construction but float32 underflow can produce zeros in ingested data.
LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class QuantileSeries:
    """Per-step quantile record theta_i for one (head, tau); index base 1."""

    tau: float
    values: np.ndarray  # shape (n,), values[j] is theta at step j+1

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64)
        )
        if self.values.ndim != 1:
            raise InvalidInput("quantile series must be 1-D")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    beta: float
    fit_window: tuple  # (first_step, last_step), 1-based inclusive
    degenerate: bool = False  # all windowed values sat at the log clamp floor
    clamped_count: int = 0


@dataclass(frozen=True)
class FitQuality:
    r2: float
    eval_range: tuple  # (first_step, last_step), 1-based inclusive
    n_points: int


def _log_values(series, start, end):
    if start < 1 or end > len(series) or end - start + 1 < 2:
        raise InvalidInput(
            f"window ({start}, {end}) needs >= 2 points inside 1..{len(series)}"
        )
    raw = series.values[start - 1 : end]
    clamped = np.maximum(raw, LOG_CLAMP)
    n_clamped = int(np.count_nonzero(raw < LOG_CLAMP))
    steps = np.arange(start, end + 1, dtype=np.float64)
    return np.log(steps), np.log(clamped), n_clamped


def fit_power_law(series, window=None):
    """OLS of log(theta_i) on log(i) over the window (default: full series).

    Returns PowerLawFit with beta = -slope and alpha = exp(intercept). The
    degenerate flag is set when every windowed value sat at the clamp floor.
    """
    if window is None:
        window = (1, len(series))
    start, end = window
    lx, ly, n_clamped = _log_values(series, start, end)
    degenerate = n_clamped == end - start + 1

    mx = lx.mean()
    my = ly.mean()
    dx = lx - mx
    denom = float(dx @ dx)
    slope = float(dx @ (ly - my)) / denom
    intercept = my - slope * mx
    return PowerLawFit(
        alpha=float(np.exp(intercept)),
        beta=-slope,
        fit_window=(start, end),
        degenerate=degenerate,
        clamped_count=n_clamped,
    )


def predict_quantile(fit, step):
    """Threshold prediction eta_S = alpha * S ** (-beta)."""
    if step < 1:
        raise InvalidInput(f"step must be >= 1, got {step}")
    return fit.alpha * float(step) ** (-fit.beta)


def r_squared(series, fit, eval_range=None):
    """Coefficient of determination in log space over eval_range.

    R^2 = 1 - SS_res / SS_tot with predictions log(alpha) - beta*log(i) and
    the mean taken over eval_range. In-window OLS gives R^2 in [0, 1];
    out-of-sample evaluation is unbounded below.
    """
    if eval_range is None:
        eval_range = (1, len(series))
    start, end = eval_range
    lx, ly, _ = _log_values(series, start, end)
    pred = np.log(fit.alpha) - fit.beta * lx
    resid = ly - pred
    centered = ly - ly.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0.0:
        raise DegenerateVariance(
            f"all log-quantiles equal over steps {start}..{end}"
        )
    r2 = 1.0 - float(resid @ resid) / ss_tot
    return FitQuality(r2=r2, eval_range=(start, end), n_points=end - start + 1)


def evaluate_warmup_fit(series, w):
    """Fit on steps 1..w, evaluate R^2 over the whole series (out-of-sample).

    Negative R^2 means the warmup fit predicts the tail worse than the
    full-series mean of the log-quantiles would.
    """
    if len(series) <= w:
        raise InvalidInput(
            f"series length {len(series)} must exceed warmup {w}"
        )
    fit = fit_power_law(series, (1, w))
    return fit, r_squared(series, fit, (1, len(series)))
