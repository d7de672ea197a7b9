import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbmnc.bounds import (
    asymptotic_backlog_quantile,
    asymptotic_epsilon,
    backlog_sweep,
    busy_period_timescale,
    chi,
    closed_form_epsilon,
    ebb_backlog_violation,
    fbm_backlog_eta,
    fbm_backlog_quantile,
    fbm_backlog_violation,
    fbm_delay_violation,
    log_asymptotic_epsilon,
    log_stirling_epsilon,
    most_probable_timescale,
    near_optimal_beta,
    stirling_epsilon,
)
from fbmnc.envelope import fbm_sample_path_envelope, log_sample_path_epsilon, sample_path_epsilon
from fbmnc.errors import DomainError, InstabilityError
from fbmnc.numerics import Interval, minimize_scalar
from fbmnc.sim import SamplePath, generate_fgn, reich_backlog
from fbmnc.traffic import FbmTraffic, ebb_envelope_rate, ebb_from_mean_and_burstiness

FLOW_H75 = FbmTraffic(0.5, 0.25, 0.75)
traffic = st.builds(FbmTraffic, st.floats(0.0, 10.0), st.floats(0.05, 5.0), st.floats(0.5, 0.95))


@given(traffic, st.floats(1.01, 3.0), st.floats(1e-2, 1e4))
def test_zero_slack_eta_is_weibull_approximation(t, load, b):
    C = t.lam * load + 0.1
    assert fbm_backlog_eta(C, t, 0.0, b) == pytest.approx(asymptotic_epsilon(C, t, b), rel=1e-12)


def test_instability():
    with pytest.raises(InstabilityError):
        fbm_backlog_violation(0.5, FLOW_H75, 10.0)
    with pytest.raises(InstabilityError):
        asymptotic_epsilon(0.4, FLOW_H75, 10.0)


def test_beta_optimum_against_grid():
    b = np.array([0.5, 5.0, 50.0, 500.0])
    res = fbm_backlog_violation(1.0, FLOW_H75, b)
    betas = np.linspace(1e-5, 0.25 - 1e-5, 40001)
    for bi, le in zip(b, res.log_epsilon):
        eta = fbm_backlog_eta(1.0, FLOW_H75, betas, bi)
        grid = log_sample_path_epsilon(betas, eta)
        assert le <= grid.min() + 1e-9


@given(st.floats(0.5, 0.9), st.floats(0.0, 1.0))
def test_backlog_bound_decreasing(h, start):
    t = FbmTraffic(0.5, 0.25, h)
    b = np.geomspace(10 ** (start - 1), 10 ** (start + 3), 30)
    assert np.all(np.diff(fbm_backlog_violation(1.0, t, b).log_epsilon) < 0)


@pytest.mark.parametrize("eps", [1e-3, 1e-9, 1e-30])
def test_quantile_inverts_violation(eps):
    b, beta = fbm_backlog_quantile(1.0, FLOW_H75, eps)
    assert fbm_backlog_violation(1.0, FLOW_H75, b).log_epsilon == pytest.approx(math.log(eps), rel=1e-6)
    assert asymptotic_epsilon(1.0, FLOW_H75, asymptotic_backlog_quantile(1.0, FLOW_H75, eps)) == pytest.approx(eps, rel=1e-9)


def test_tangency_time_touches_service_line():
    b = 50.0
    res = fbm_backlog_violation(1.0, FLOW_H75, b)
    tau = most_probable_timescale(1.0, FLOW_H75, b, res.beta_opt)
    assert tau == pytest.approx(res.tau_star, rel=1e-10)
    t = np.geomspace(1e-2, 1e6, 200001)
    gap = fbm_sample_path_envelope(FLOW_H75, res.beta_opt, res.eta_opt, t) - 1.0 * t
    assert gap.max() == pytest.approx(b, rel=1e-6)
    assert t[np.argmax(gap)] == pytest.approx(tau, rel=1e-3)


def test_busy_period_timescale_meets_line():
    tp = busy_period_timescale(1.0, FLOW_H75, 1e-6)
    assert fbm_sample_path_envelope(FLOW_H75, 0.0, 1e-6, tp) == pytest.approx(tp, rel=1e-12)


@pytest.mark.parametrize("d", [0.3, 7.0, 100.0])
def test_delay_bound_at_constant_rate_is_backlog_bound(d):
    # a FIFO constant-rate server delays by backlog / C
    C = 2.0
    assert fbm_delay_violation(C, FLOW_H75, d) == pytest.approx(fbm_backlog_violation(C, FLOW_H75, C * d).epsilon, rel=1e-6)


def test_reich_backlog_dominated_by_bound():
    # 2048 stationary queues sampled at slot 4096, starting empty
    trials, n, b = 2048, 4096, 3.0
    from fbmnc.sim import FgnSynthesizer

    synth = FgnSynthesizer(FLOW_H75.hurst, FLOW_H75.sigma, n)
    final = []
    for block in range(trials // 1024):
        z = synth.block(11, block)
        for path in z:
            final.append(reich_backlog(SamplePath(path, FLOW_H75.lam, 11, FLOW_H75.hurst, FLOW_H75.sigma), 1.0)[-1])
    freq = np.mean(np.array(final) > b)
    assert freq <= fbm_backlog_violation(1.0, FLOW_H75, b).epsilon


def test_reich_backlog_matches_supremum_form():
    p = generate_fgn(FbmTraffic(0.9, 0.5, 0.7), 300, seed=5)
    A = p.cumulative()
    C = 1.0
    brute = np.array([max(A[t] - A[s] - C * (t - s) for s in range(t + 1)) for t in range(1, 301)])
    assert reich_backlog(p, C) == pytest.approx(brute, abs=1e-9)


def test_stirling_converges_monotonically():
    eta = 1e-9
    ratios = [stirling_epsilon(b, eta) / sample_path_epsilon(b, eta) for b in (0.05, 0.02, 0.01, 0.005)]
    assert all(abs(r2 - 1) < abs(r1 - 1) for r1, r2 in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1) < 0.01


@given(st.floats(-700.0, -1.5))
def test_lambert_beta_minimizes_stirling_form(log_eps_a):
    nb = near_optimal_beta(math.exp(log_eps_a))
    assert nb.lambert_available
    beta, _ = minimize_scalar(lambda b: log_stirling_epsilon(b, math.exp(log_eps_a)), Interval(1e-6, 0.999),
                              tol=1e-13, vectorized=True)
    assert nb.lambert == pytest.approx(beta, rel=1e-5, abs=1e-9)
    assert nb.linear == pytest.approx(1.0 / (-2.0 * log_eps_a))


def test_lambert_unavailable_for_large_probability():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        nb = near_optimal_beta(0.5)
    assert not nb.lambert_available and nb.lambert is None
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


@given(st.floats(0.5, 0.95), st.floats(0.0, 1.0))
def test_chi_at_most_one(h, frac):
    beta = frac * (1 - h) * 0.999
    assert 0 < chi(h, beta) <= 1 + 1e-15
    assert chi(h, 0.0) == pytest.approx(1.0)


def test_closed_form_tracks_optimized_bound():
    b = np.geomspace(2e3, 1e6, 40) / 1e4  # Fig 3 sweep in units of 10 kb
    ratio = closed_form_epsilon(1.0, FLOW_H75, b) / fbm_backlog_violation(1.0, FLOW_H75, b).epsilon
    assert np.all((ratio > 0.5) & (ratio < 2.0))
    with pytest.raises(DomainError):
        closed_form_epsilon(1.0, FLOW_H75, 1e-3)


def test_onoff_backlog_against_theta_grid():
    a = ebb_from_mean_and_burstiness(100, 25.0, 125.0, 100.0)
    C = 1e4
    b = np.array([1e3, 1e4, 1e5])
    res = ebb_backlog_violation(C, a, b)
    theta = np.linspace(1e-9, 2e-3, 200001)
    slack = C - a.m * ebb_envelope_rate(a, theta)
    ok = slack > 0
    for bi, le in zip(b, res.log_epsilon):
        grid = -theta[ok] * bi - np.log(theta[ok] * slack[ok])
        assert le <= grid.min() + 1e-9
        assert le == pytest.approx(grid.min(), abs=1e-4)


def test_onoff_backlog_trivial_and_unstable():
    a = ebb_from_mean_and_burstiness(10, 1.0, 5.0, 100.0)
    assert ebb_backlog_violation(60.0, a, 3.0).epsilon == 0.0
    with pytest.raises(InstabilityError):
        ebb_backlog_violation(10.0, a, 3.0)


def test_sweep_columns():
    rows = backlog_sweep(1.0, FLOW_H75, np.geomspace(1, 100, 7))
    assert set(rows) == {"b", "epsilon_rigorous", "epsilon_asymptotic", "beta_opt", "eta_opt", "tau_star"}
    assert all(len(v) == 7 for v in rows.values())
    assert np.all(rows["epsilon_rigorous"] >= rows["epsilon_asymptotic"])


def test_log_asymptotic_matches_direct_formula():
    b = 123.0
    h, C = FLOW_H75.hurst, 1.0
    direct = -((C - FLOW_H75.lam) ** (2 * h)) * b ** (2 - 2 * h) / (2 * FLOW_H75.sigma**2 * h ** (2 * h) * (1 - h) ** (2 - 2 * h))
    assert log_asymptotic_epsilon(C, FLOW_H75, b) == pytest.approx(direct, rel=1e-14)
