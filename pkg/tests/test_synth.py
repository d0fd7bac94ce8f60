import numpy as np
import pytest

from siftlab.errors import InvalidInput
from siftlab.powerlaw import fit_power_law, predict_quantile, r_squared
from siftlab.synth import (
    SynthParams,
    generate_powerlaw_series,
    generate_quantile_trace,
    generate_score_trace,
)
from siftlab.tracefile import quantile_series_from_trace

# Frozen regression baseline for the seeded score-trace generator
# (concentration=1.5, seed=7, steps=2048, tau=0.5 full-series fit).
BASELINE_R2 = 0.982420826167


class TestPowerlawSeries:
    def test_noiseless_on_manifold(self):
        p = SynthParams(alpha=0.8, beta=0.6, steps=256)
        series = generate_powerlaw_series(p)
        i = np.arange(1, 257)
        np.testing.assert_array_equal(series.values, 0.8 * i ** (-0.6))
        fit = fit_power_law(series)
        preds = [predict_quantile(fit, s) for s in range(1, 257)]
        np.testing.assert_allclose(preds, series.values, rtol=1e-9)

    def test_determinism(self):
        p = SynthParams(alpha=1.0, beta=0.5, noise_sigma=0.2, steps=100, seed=99)
        a = generate_powerlaw_series(p)
        b = generate_powerlaw_series(p)
        np.testing.assert_array_equal(a.values, b.values)

    def test_noisy_beta_recovery(self):
        p = SynthParams(alpha=1.0, beta=0.65, noise_sigma=0.1, steps=4096, seed=42)
        fit = fit_power_law(generate_powerlaw_series(p))
        assert abs(fit.beta - 0.65) <= 0.02

    def test_invalid_params(self):
        with pytest.raises(InvalidInput):
            SynthParams(alpha=-1.0)
        with pytest.raises(InvalidInput):
            SynthParams(noise_sigma=-0.1)
        with pytest.raises(InvalidInput):
            SynthParams(steps=0)


class TestScoreTrace:
    def test_rows_sum_to_one(self):
        trace = generate_score_trace(SynthParams(steps=64, seed=1))
        for i, row in enumerate(trace.records, start=1):
            assert len(row) == i
            assert abs(float(np.sum(row, dtype=np.float64)) - 1.0) < 1e-6

    def test_tiny_concentration_gives_uniform_rows(self):
        trace = generate_score_trace(SynthParams(steps=32, seed=2, concentration=1e-9))
        for tau in (0.25, 0.5, 0.9):
            series = quantile_series_from_trace(trace, tau)
            i = np.arange(1, 33)
            np.testing.assert_allclose(series.values, 1.0 / i, rtol=1e-5)

    def test_frozen_fit_quality_baseline(self):
        trace = generate_score_trace(SynthParams(steps=2048, seed=7, concentration=1.5))
        series = quantile_series_from_trace(trace, 0.5)
        fit = fit_power_law(series)
        r2 = r_squared(series, fit).r2
        assert r2 > 0.9
        assert r2 == pytest.approx(BASELINE_R2, abs=1e-6)

    def test_determinism(self):
        a = generate_score_trace(SynthParams(steps=20, seed=5))
        b = generate_score_trace(SynthParams(steps=20, seed=5))
        for ra, rb in zip(a.records, b.records):
            np.testing.assert_array_equal(ra, rb)


class TestQuantileTrace:
    def test_levels_and_shape(self):
        trace = generate_quantile_trace(
            SynthParams(alpha=0.5, beta=0.4, steps=50), taus=[0.5, 0.875]
        )
        assert trace.header.quantile_levels == [0.5, 0.875]
        assert all(len(r) == 2 for r in trace.records)

    def test_series_roundtrip(self):
        trace = generate_quantile_trace(
            SynthParams(alpha=0.5, beta=0.4, steps=50), taus=[0.5]
        )
        series = quantile_series_from_trace(trace, 0.5)
        i = np.arange(1, 51)
        np.testing.assert_allclose(series.values, 0.5 * i ** (-0.4), rtol=1e-6)
