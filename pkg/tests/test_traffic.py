import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from fbmnc.errors import DomainError, InfeasibleError
from fbmnc.traffic import (
    CbrTraffic,
    EbbOnOffAggregate,
    FbmTraffic,
    ebb_critical_theta,
    ebb_envelope_rate,
    ebb_from_mean_and_burstiness,
    fbm_effective_bandwidth,
    fgn_autocovariance,
    multiplexed_fbm,
)


def test_fbm_validation():
    for args in [(-1.0, 1.0, 0.7), (1.0, 0.0, 0.7), (1.0, 1.0, 1.0), (1.0, 1.0, 0.0)]:
        with pytest.raises(DomainError):
            FbmTraffic(*args)
    with pytest.raises(DomainError):
        FbmTraffic(1.0, 1.0, 0.4).require_rigorous()
    FbmTraffic(1.0, 1.0, 0.5).require_rigorous()


def test_onoff_from_table_row():
    # P = 5 lambda and T = 10 slots: p_on = 0.2, p12 = 1/(T(1-p_on)), p21 = 1/(T p_on)
    a = ebb_from_mean_and_burstiness(100, 50.0, 250.0, 10.0)
    assert a.p_on == pytest.approx(0.2)
    assert a.p12 == pytest.approx(0.125)
    assert a.p21 == pytest.approx(0.5)
    assert a.burstiness == pytest.approx(10.0)
    assert a.mean_rate == pytest.approx(100 * 50.0)


def test_onoff_infeasible_burstiness():
    with pytest.raises(InfeasibleError, match="T >= 5"):
        ebb_from_mean_and_burstiness(1, 1.0, 5.0, 2.0)
    with pytest.raises(DomainError):
        ebb_from_mean_and_burstiness(1, 5.0, 5.0, 20.0)


def spectral_rate(a, theta):
    m = np.array([[a.p11, a.p12 * math.exp(theta * a.peak)], [a.p21, a.p22 * math.exp(theta * a.peak)]])
    return math.log(max(abs(np.linalg.eigvals(m)))) / theta


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(1e-3, 5.0))
def test_envelope_rate_matches_eigenvalue(p12, p21, theta):
    a = EbbOnOffAggregate(3, 2.0, p12, p21)
    assert ebb_envelope_rate(a, theta) == pytest.approx(spectral_rate(a, theta), rel=1e-9)


def test_envelope_rate_limits_and_monotonicity():
    a = ebb_from_mean_and_burstiness(10, 1.0, 5.0, 100.0)
    theta = np.geomspace(1e-6, 1e3, 400)
    rho = ebb_envelope_rate(a, theta)
    assert np.all(np.diff(rho) >= -1e-12)
    assert rho[0] == pytest.approx(a.source_mean, rel=1e-4)
    assert rho[-1] == pytest.approx(a.peak, rel=1e-3)
    with pytest.raises(DomainError):
        ebb_envelope_rate(a, 0.0)


def test_critical_theta_hits_rate():
    a = ebb_from_mean_and_burstiness(100, 25.0, 125.0, 100.0)
    rate = 1.5 * a.mean_rate
    tc = ebb_critical_theta(a, rate)
    assert a.m * ebb_envelope_rate(a, tc) == pytest.approx(rate, rel=1e-9)
    # rate above the aggregate peak: every theta is admissible
    assert ebb_critical_theta(a, 2 * a.m * a.peak, theta_cap=7.0) == 7.0
    with pytest.raises(DomainError):
        ebb_critical_theta(a, a.mean_rate)


def test_fgn_autocovariance_values():
    t = FbmTraffic(0.0, 2.0, 0.75)
    assert fgn_autocovariance(t, 0) == pytest.approx(4.0)
    assert fgn_autocovariance(t, 1) == pytest.approx(2.0 * (2**1.5 - 2.0))
    assert fgn_autocovariance(FbmTraffic(0.0, 1.0, 0.5), np.arange(1, 10)) == pytest.approx(np.zeros(9), abs=1e-15)


@given(st.floats(0.05, 0.95), st.integers(1, 60))
def test_fgn_covariance_sums_to_fbm_variance(h, n):
    t = FbmTraffic(0.0, 1.3, h)
    lags = np.subtract.outer(np.arange(n), np.arange(n))
    assert fgn_autocovariance(t, lags).sum() == pytest.approx(1.3**2 * n ** (2 * h), rel=1e-10)


@pytest.mark.parametrize("theta,horizon", [(0.01, 1.0), (0.002, 50.0), (0.05, 3.0)])
def test_effective_bandwidth_against_gaussian_mgf(theta, horizon):
    t = FbmTraffic(5.0, 4.0, 0.7)
    mean = t.lam * horizon
    sd = t.sigma * horizon**t.hurst
    mgf, _ = integrate.quad(lambda x: math.exp(theta * x) * stats.norm.pdf(x, mean, sd), mean - 40 * sd, mean + 40 * sd,
                            epsrel=1e-13, limit=200)
    assert fbm_effective_bandwidth(t, theta, horizon) == pytest.approx(math.log(mgf) / (theta * horizon), rel=1e-9)


def test_multiplexing_keeps_mean():
    agg = multiplexed_fbm(FbmTraffic(0.5, 0.4, 0.8), 16)
    assert agg.lam == 0.5 and agg.sigma == pytest.approx(0.1) and agg.hurst == 0.8
    with pytest.raises(DomainError):
        multiplexed_fbm(FbmTraffic(0.5, 0.4, 0.8), 0)


def test_cbr():
    assert CbrTraffic(3.0).mean_rate == 3.0
    with pytest.raises(DomainError):
        CbrTraffic(-1.0)
