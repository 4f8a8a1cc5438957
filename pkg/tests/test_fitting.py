"""Curve-fit round trips on synthetic data with known ground truth."""

import numpy as np
import pytest

from dotspin.fitting import (
    classify_shifts,
    coherence_metric,
    fit_coherence_decay,
    fit_esr_histogram,
    fit_flip_intervals,
    fit_hahn,
    fit_ramsey,
    fit_sinusoid,
)


class TestSinusoid:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        x = np.linspace(0.0, 20.0, 120)
        y = 0.4 * np.cos(2 * np.pi * 0.22425 * x + 0.7) + 0.5
        y += rng.normal(0.0, 0.01, len(x))
        fit = fit_sinusoid(x, y)
        assert fit.converged
        assert fit.value("frequency") == pytest.approx(0.22425, rel=1e-3)
        assert fit.value("amplitude") == pytest.approx(0.4, rel=0.02)
        assert fit.value("offset") == pytest.approx(0.5, abs=0.01)

    def test_frequency_bounded_by_nyquist(self):
        rng = np.random.default_rng(1)
        x = np.linspace(0.0, 10.0, 40)
        y = rng.normal(0.5, 0.1, len(x))
        fit = fit_sinusoid(x, y)
        assert fit.value("frequency") <= 0.5 / np.median(np.diff(x)) + 1e-12


class TestRamsey:
    def test_round_trip_with_stretching_exponent(self):
        rng = np.random.default_rng(2)
        tau = np.linspace(1.0, 9000.0, 140)
        truth = dict(a=0.45, f=2e-3, phi=0.0, t2=2900.0, alpha=2.11, c=0.5)
        y = (truth["a"] * np.cos(2 * np.pi * truth["f"] * tau)
             * np.exp(-((tau / truth["t2"]) ** truth["alpha"])) + truth["c"])
        y += rng.normal(0.0, 0.01, len(tau))
        fit = fit_ramsey(tau, y)
        assert fit.converged
        assert fit.value("t2star") == pytest.approx(2900.0, rel=0.05)
        assert fit.value("alpha") == pytest.approx(2.11, rel=0.15)
        assert fit.value("frequency") == pytest.approx(2e-3, rel=0.01)

    def test_alpha_fixed_is_pinned(self):
        tau = np.linspace(1.0, 6000.0, 60)
        y = 0.5 * np.cos(2 * np.pi * 2e-3 * tau) * np.exp(-((tau / 2000.0) ** 2)) + 0.5
        fit = fit_ramsey(tau, y, alpha_fixed=2.0)
        assert fit.parameters["alpha"] == 2.0
        assert fit.uncertainties["alpha"] == 0.0
        assert fit.value("t2star") == pytest.approx(2000.0, rel=0.02)

    def test_minimum_points(self):
        with pytest.raises(ValueError):
            fit_ramsey(np.arange(5.0), np.zeros(5))


class TestHahn:
    def test_round_trip(self):
        tau = np.linspace(100.0, 40000.0, 30)
        y = 0.5 * np.exp(-2.0 * tau / 16000.0) + 0.25
        fit = fit_hahn(tau, y)
        assert fit.value("t2") == pytest.approx(16000.0, rel=1e-4)
        assert "infinite_t2" not in fit.flags

    def test_flat_data_flags_infinite_t2(self):
        tau = np.linspace(100.0, 40000.0, 30)
        y = np.full_like(tau, 0.75)
        fit = fit_hahn(tau, y)
        assert fit.flags.get("infinite_t2")
        assert fit.parameters["t2"] == np.inf

    def test_minimum_points(self):
        with pytest.raises(ValueError):
            fit_hahn(np.arange(3.0), np.zeros(3))


class TestFlipIntervals:
    def test_recovers_exponential_mean(self):
        rng = np.random.default_rng(3)
        intervals = rng.exponential(75.0, 400)
        fit = fit_flip_intervals(intervals)
        # the seed-3 sample mean is itself ~8% above the true scale
        assert fit.value("t1") == pytest.approx(75.0, rel=0.2)
        assert fit.flags["ml_mean"] == pytest.approx(np.mean(intervals))

    def test_minimum_events(self):
        with pytest.raises(ValueError):
            fit_flip_intervals(np.ones(9))


class TestSpectrumHistogram:
    def _series(self, rng, n, f0=0.0, a1=503.0, a2=119.0, sigma=34.0):
        s1 = rng.integers(0, 2, n)
        s2 = rng.integers(0, 2, n)
        centres = f0 + (2 * s1 - 1) * a1 + (2 * s2 - 1) * a2
        return centres + rng.normal(0.0, sigma, n)

    def test_recovers_four_peak_structure(self):
        rng = np.random.default_rng(4)
        freqs = self._series(rng, 4000)
        fit = fit_esr_histogram(freqs)
        assert fit.value("a1") == pytest.approx(503.0, rel=0.05)
        assert fit.value("a2") == pytest.approx(119.0, rel=0.10)
        assert fit.value("sigma") == pytest.approx(34.0, rel=0.15)
        assert abs(fit.value("f0")) < 10.0

    def test_minimum_samples(self):
        with pytest.raises(ValueError):
            fit_esr_histogram(np.zeros(99))

    def test_classify_shifts_and_intervals(self):
        # centre frequency jumps by 2*a1 or 2*a2 when a bath spin flips
        series = np.array([0.0, 0.0, 1006.0, 1006.0, 768.0, 768.0, 770.0])
        out = classify_shifts(series, a1=1006.0, a2=238.0, sigma=20.0)
        assert out["labels"] == ["none", "A1", "none", "A2", "none", "none"]
        assert out["intervals"]["A1"].size == 0

    def test_classify_interval_spacing(self):
        series = np.array([0.0, 1006.0, 0.0, 1006.0])
        times = np.array([0.0, 40.0, 80.0, 120.0])
        out = classify_shifts(series, 1006.0, 238.0, 20.0, times=times)
        assert np.array_equal(out["intervals"]["A1"], [40.0, 40.0])


class TestCoherence:
    def test_metric_definition_and_bounds(self):
        assert coherence_metric(1.0, 0.0, 0.5, 0.5) == pytest.approx(1.0)
        assert coherence_metric(0.5, 0.5, 0.5, 0.5) == 0.0
        with pytest.raises(ValueError):
            coherence_metric(1.2, 0.0, 0.5, 0.5)
        with pytest.warns(UserWarning):
            coherence_metric(1.0, 0.0, 1.0, 0.0)

    def test_decay_round_trip(self):
        k = np.arange(0.0, 101.0, 10.0)
        c = 0.98 * np.exp(-k * 0.0045)
        fit = fit_coherence_decay(k, c)
        assert fit.value("p_err") == pytest.approx(0.0045, rel=1e-3)
        assert fit.value("c0") == pytest.approx(0.98, rel=1e-3)

    def test_decay_minimum_points(self):
        with pytest.raises(ValueError):
            fit_coherence_decay([0.0, 1.0], [1.0, 0.9])
