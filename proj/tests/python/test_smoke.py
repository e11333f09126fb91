"""Smoke tests for the Python bindings."""

import math

import pytest

try:
    import _dsprt as d
except ImportError:  # installed as a package
    import dsprt as d


def test_closed_forms():
    assert d.h_function(0.01, 0.01) == pytest.approx(4.50321745313, abs=1e-9)
    a, b = d.wald_thresholds(d.ErrorLevels(0.01, 0.01))
    assert a == pytest.approx(math.log(99.0))
    assert b == pytest.approx(math.log(99.0))
    perf = d.sprt_performance_brownian([1.0, 1.0], d.ErrorLevels(0.01, 0.01))
    assert perf["e0_delay"] == pytest.approx(4.50321745313, abs=1e-9)


def test_kl_bounds_and_advisor():
    i0, i1 = d.kl_lower_bounds(d.LocalThresholds(2.0, 2.0))
    assert i0 == pytest.approx(1.52318831191, abs=1e-9)
    assert i0 == pytest.approx(i1)
    assert d.threshold_size_advisor(1.0, math.exp(-9.0)) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        d.ErrorLevels(0.0, 0.1)


def test_quantization_and_bound():
    model = d.HypothesisModel.gaussian(1.0, 1.0)
    table = d.estimate_quantization(model, d.LocalThresholds(1.0, 1.0), 20000, 7)
    assert table.lambda_lo > 1.0  # weights dominate the thresholds
    assert table.lambda_hi > 1.0
    assert 0.0 < table.theta_hat < d.lorden_overshoot_bound(model, 1)
    assert table.mean_period1 > 1.0


def test_trials_from_config():
    sys = d.system_from_config(
        "mode = continuous\nk = 2\nmu = 1\ndt = 0.01\ndelta = 2\n"
        "alpha = 0.01\nbeta = 0.01\ntruth = 1\n"
    )
    assert sys.K == 2
    assert sys.a_tilde == pytest.approx(abs(math.log(0.01)) + 8.0)
    r1 = d.run_dsprt_trial(sys, 5, 0)
    r2 = d.run_dsprt_trial(sys, 5, 0)
    assert r1.decision in (0, 1)
    assert r1.stop_time == r2.stop_time  # deterministic replay
    assert r1.u_tilde_at_stop == r2.u_tilde_at_stop
    c = d.run_centralized_sprt_trial(sys, 4.0, 4.0, 5, 0)
    assert abs(c.u_at_stop) >= 4.0


def test_sweep_csv_reproducible():
    cfg = (
        "mode = continuous\nk = 2\nmu = 1\ndt = 0.01\ndelta_grid = 2\n"
        "alpha_grid = 0.05\nschemes = dsprt\ntrials = 100\n"
        "calib_n_mc = 2000\nquant_n_mc = 5000\n"
    )
    out1 = d.run_sweep_csv(cfg, seed=3)
    out2 = d.run_sweep_csv(cfg, seed=3)
    assert out1 == out2
    assert out1.splitlines()[0].startswith("scheme,delta,period")
    assert "dsprt" in out1


def test_config_errors():
    with pytest.raises(d.ConfigError):
        d.system_from_config("mode = continuous\ndelta = 2\nwat = 1\n")
