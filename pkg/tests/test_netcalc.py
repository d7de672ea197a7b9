import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fbmnc.envelope import (
    EbbExponential,
    FbmRigorous,
    fbm_affine_profile,
    log_vartheta,
)
from fbmnc.errors import ComposabilityError, DomainError, InfeasibleError, InstabilityError
from fbmnc.netcalc import (
    NetworkProfile,
    RateServiceCurve,
    TandemScenario,
    compose_homogeneous,
    e2e_delay_bound,
    e2e_delay_violation,
    ebb_leftover,
    ebb_network_service,
    fbm_leftover,
    fbm_leftover_asymptotic,
    fbm_network_service,
    log_single_hop_delay_violation,
    network_near_optimal_beta,
    log_network_stirling_profile,
    network_stirling_profile,
    psi,
    sample_path_deficit,
    scaling_law_check,
    simplified_network_quantile,
    single_hop_delay_violation,
    through_envelope,
)
from fbmnc.traffic import CbrTraffic, FbmTraffic, ebb_from_mean_and_burstiness

C = 1e4
CROSS = FbmTraffic(2500.0, 1250.0, 0.75)
CBR = CbrTraffic(2500.0)
ONOFF = ebb_from_mean_and_burstiness(100, 25.0, 125.0, 100.0)


def test_leftover_deficit_is_affine_profile():
    s = fbm_leftover(C, CROSS, 5000.0, 0.05)
    assert s.rate == 5000.0
    b = np.geomspace(1.0, 1e6, 9)
    assert s.deficit(b) == pytest.approx(fbm_affine_profile(CROSS, 5000.0, 0.05)(b), rel=1e-15)
    assert fbm_leftover(C, CROSS, C * (1 - 1e-15), 0.05).rate == pytest.approx(0.0, abs=1e-10)


def test_leftover_rejects_rate_outside_interval():
    for r in (2000.0, 1e4, 2e4):
        with pytest.raises(InfeasibleError, match=r"\(2500, 10000\)"):
            fbm_leftover(C, CROSS, r, 0.05)
    with pytest.raises(InfeasibleError):
        fbm_leftover_asymptotic(C, CROSS, 100.0)
    with pytest.raises(InfeasibleError):
        ebb_leftover(C, ONOFF, 100.0, 1e-3)


def test_rate_service_curve_validation():
    with pytest.raises(DomainError):
        RateServiceCurve(-1.0, EbbExponential(1.0, 1.0))
    assert RateServiceCurve(2.0, EbbExponential(1.0, 1.0))(3.0) == 6.0


def test_single_hop_cbr_is_deficit_at_delay_times_rate():
    s = fbm_leftover(C, CROSS, 5000.0, 0.05)
    env = through_envelope(CBR)
    d = 40.0
    assert single_hop_delay_violation(s, env, d) == pytest.approx(min(1.0, s.deficit(d * s.rate)), rel=1e-14)
    with pytest.raises(InstabilityError):
        single_hop_delay_violation(s, through_envelope(CbrTraffic(6000.0)), d)


def test_through_envelope_kinds():
    assert through_envelope(CBR).rate == 2500.0
    with pytest.raises(DomainError):
        through_envelope(ONOFF)
    assert through_envelope(ONOFF, 4000.0, 1e-4).profile.theta == 1e-4
    assert through_envelope(FbmTraffic(2500.0, 1250.0, 0.75), 4000.0, 0.05).profile.beta == 0.05


def test_single_hop_split_against_grid():
    s = fbm_leftover(C, CROSS, 5000.0, 0.05)
    from fbmnc.traffic import ebb_critical_theta

    env = through_envelope(ONOFF, 4000.0, 0.5 * ebb_critical_theta(ONOFF, 4000.0))
    d = 30.0
    total = d * s.rate
    x = np.linspace(0.0, total, 100001)
    grid = np.logaddexp(env.profile.log_eps(x), s.deficit.log_eps(total - x)).min()
    value = log_single_hop_delay_violation(s, env, d)
    assert value <= grid + 1e-12
    assert value == pytest.approx(grid, rel=1e-6)


@given(st.integers(2, 40), st.floats(1e-3, 2.0), st.floats(0.01, 10.0), st.floats(0.1, 100.0))
def test_onoff_network_split_closed_form(n, theta, delta_total, scale):
    hop = EbbExponential(theta, 3.0)
    net = NetworkProfile(hop, n, delta_total)
    offset = (n - 1) * math.log((n - 1) / (delta_total * theta)) / (n * theta)
    b = n * (offset + scale / theta)  # puts the stationary point strictly inside (0, b)
    x = b / n - offset
    assert 0 < x < b
    assert net.split(b) * b == pytest.approx(x, rel=1e-5, abs=1e-6 / theta)


def _random_hops(rng, count):
    hops = []
    for _ in range(count):
        kind = rng.integers(3)
        h = rng.uniform(0.5, 0.9)
        if kind == 0:
            beta = rng.uniform(0.01, 0.45) * (1 - h)
            hops.append(FbmRigorous(math.exp(rng.uniform(-15, 5)), beta, h))
        elif kind == 1:
            from fbmnc.envelope import FbmAsymptotic

            hops.append(FbmAsymptotic(math.exp(rng.uniform(-8, 1)), h))
        else:
            hops.append(EbbExponential(math.exp(rng.uniform(-6, 1)), math.exp(rng.uniform(-3, 5))))
    return hops


def test_network_infimum_against_grid_oracle():
    rng = np.random.default_rng(2024)
    for hop in _random_hops(rng, 50):
        n = int(rng.integers(2, 12))
        delta = math.exp(rng.uniform(-4, 1))
        net = NetworkProfile(hop, n, delta)
        relaxed = net.relaxed_hop
        b = float(hop.log_inverse(-rng.uniform(3, 40))) * rng.uniform(1.5, 6.0) + 1.0
        x = np.linspace(0.0, b, 10_000)
        grid = np.logaddexp(hop.log_eps(x), math.log(n - 1) + relaxed.log_eps((b - x) / (n - 1)))
        value = float(net.log_eps(b))
        assert value <= grid.min() + 1e-9 * abs(grid.min())
        assert value >= grid.min() - 1e-3 * abs(grid.min()) - 1e-6


def test_compose_single_hop_is_identity_and_rejects_bad_delta():
    s = fbm_leftover(C, CROSS, 5000.0, 0.05)
    assert compose_homogeneous(s, 1) is s
    net = compose_homogeneous(s, 3, 1000.0)
    assert net.rate == 4000.0 and net.deficit.n == 3
    for bad in (None, 0.0, 5000.0):
        with pytest.raises(InfeasibleError):
            compose_homogeneous(s, 3, bad)


def test_network_needs_integrable_hop():
    s = fbm_leftover(C, CROSS, 5000.0, 0.2)
    with pytest.raises(ComposabilityError):
        compose_homogeneous(s, 2, 100.0)
    with pytest.raises(ComposabilityError):
        sample_path_deficit(s, 100.0)


def test_network_log_inverse_round_trip():
    net = NetworkProfile(FbmRigorous(1e-6, 0.05, 0.75), 5, 300.0)
    b = float(net.log_inverse(math.log(1e-9)))
    assert float(net.log_eps(b)) == pytest.approx(math.log(1e-9), rel=1e-9)


def test_scenario_validation():
    with pytest.raises(InfeasibleError):
        TandemScenario(2, C, FbmTraffic(6000.0, 1.0, 0.75), CbrTraffic(5000.0))
    with pytest.raises(InfeasibleError):
        TandemScenario(2, C, CROSS, CBR, r_cross=8000.0)
    with pytest.raises(InfeasibleError, match="Delta"):
        TandemScenario(2, C, CROSS, CBR, r_cross=5000.0, delta_total=3000.0)
    with pytest.raises(DomainError):
        TandemScenario(0, C, CROSS, CBR)
    with pytest.raises(DomainError):
        TandemScenario(2, C, ONOFF, CBR, approximate=True)
    assert TandemScenario(1, C, CROSS, CBR).with_n(4).n == 4


@pytest.mark.parametrize("through", [CBR, ONOFF, FbmTraffic(2500.0, 1250.0, 0.75)], ids=["cbr", "onoff", "fbm"])
def test_one_hop_network_equals_single_hop(through):
    sc = TandemScenario(1, C, CROSS, through)
    res = e2e_delay_violation(sc, 100.0)
    hop = fbm_leftover(C, CROSS, res.r_cross, res.cross_param)
    env = through_envelope(through, res.through_rate, res.through_param)
    direct = float(log_single_hop_delay_violation(hop, env, 100.0))
    assert res.log_epsilon == pytest.approx(direct, rel=1e-10)


def test_forward_optimum_not_beaten_by_random_parameters():
    sc = TandemScenario(3, C, CROSS, CBR)
    res = e2e_delay_violation(sc, 60.0)
    rng = np.random.default_rng(0)
    for _ in range(200):
        r = rng.uniform(2600.0, 7400.0)
        delta = rng.uniform(0.01, 0.99) * (C - r - 2500.0)
        beta = rng.uniform(1e-3, 0.124)
        s = compose_homogeneous(fbm_leftover(C, CROSS, r, beta), 3, delta)
        assert res.log_epsilon <= float(log_single_hop_delay_violation(s, through_envelope(CBR), 60.0)) + 1e-6


@pytest.mark.parametrize("n,cross", [(1, CROSS), (3, CROSS), (2, ONOFF)], ids=["fbm-1", "fbm-3", "onoff-2"])
def test_inverse_matches_bisection(n, cross):
    sc = TandemScenario(n, C, cross, CBR)
    eps = 1e-9
    res = e2e_delay_bound(sc, eps)
    lo, hi = 0.0, 1.0
    while e2e_delay_violation(sc, hi).epsilon > eps:
        lo, hi = hi, 2 * hi
    for _ in range(14):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if e2e_delay_violation(sc, mid).epsilon <= eps else (mid, hi)
    assert lo - 1e-3 * hi <= res.delay <= hi * (1 + 1e-3)
    assert res.epsilon == pytest.approx(eps, rel=1e-6)


def test_delay_bound_grows_with_hops():
    delays = [e2e_delay_bound(TandemScenario(n, C, CROSS, CBR), 1e-9).delay for n in (1, 2, 4, 8)]
    assert np.all(np.diff(delays) > 0)


def test_approximate_profile_inverse_by_bisection():
    sc = TandemScenario(3, C, CROSS, CBR, approximate=True)
    res = e2e_delay_bound(sc, 1e-9)
    assert res.epsilon == pytest.approx(1e-9, rel=1e-4)
    rigorous = e2e_delay_bound(TandemScenario(3, C, CROSS, CBR), 1e-9)
    assert res.delay < rigorous.delay


def test_network_service_builders():
    sc = TandemScenario(3, C, CROSS, CBR, r_cross=5000.0, delta_total=600.0)
    s = fbm_network_service(sc, 0.05)
    assert s.rate == pytest.approx(4400.0)
    sc2 = TandemScenario(3, C, ONOFF, CBR, r_cross=5000.0, delta_total=600.0)
    from fbmnc.traffic import ebb_critical_theta

    assert ebb_network_service(sc2, 0.5 * ebb_critical_theta(ONOFF, 5000.0)).rate == pytest.approx(4400.0)


def test_network_beta_and_psi():
    assert network_near_optimal_beta(1, 1e-9, 0.75) == pytest.approx(1 / (2 * 9 * math.log(10)))
    assert network_near_optimal_beta(16, 1e-9, 0.75) == pytest.approx(4 / (2 * 9 * math.log(10)))
    assert psi(0.75, 0.0) == 1.0
    assert psi(0.75, 0.0625) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        psi(0.75, 0.125)
    with pytest.raises(DomainError):
        network_near_optimal_beta(0, 0.1, 0.7)


@pytest.mark.parametrize("n", [2, 8])
def test_network_stirling_profile_converges(n):
    r, delta = 5000.0, 1000.0
    b = 5e5
    ratios = []
    for beta in (0.02, 0.005, 0.001, 0.0002):
        hop = FbmRigorous(math.exp(log_vartheta(CROSS, r, beta)), beta, CROSS.hurst)
        log_exact = math.log(n) + hop.relaxed(delta / (n - 1)).log_eps(b / n)
        ratios.append(math.exp(log_network_stirling_profile(CROSS, n, r, delta, beta, b) - log_exact))
    assert all(abs(b2 - 1) < abs(b1 - 1) for b1, b2 in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1) < 0.01


def test_network_stirling_profile_linear_scale():
    value = network_stirling_profile(CROSS, 3, 5000.0, 1000.0, 0.02, 1e5)
    assert 0 < value < 1
    assert math.log(value) == pytest.approx(log_network_stirling_profile(CROSS, 3, 5000.0, 1000.0, 0.02, 1e5), rel=1e-14)
    assert network_stirling_profile(CROSS, 3, 5000.0, 1000.0, 0.02, 1.0) > 1  # not clipped: it is a bound, not a probability


def test_simplified_quantile_meets_target():
    sc = TandemScenario(4, C, CROSS, CBR)
    b, p = simplified_network_quantile(sc, 1e-6)
    hop = FbmRigorous(math.exp(log_vartheta(CROSS, p["r"], p["cross_p"])), p["cross_p"], CROSS.hurst)
    assert 4 * hop.relaxed(p["delta"] / 3)(b / 4) == pytest.approx(1e-6, rel=1e-6)
    with pytest.raises(DomainError):
        simplified_network_quantile(sc.with_n(1), 1e-6)


def test_scaling_report_shape():
    rep = scaling_law_check(TandemScenario(2, C, CROSS, CBR), 1e-6, [2, 4, 8])
    assert rep.n_values == (2, 4, 8)
    assert np.all(np.diff(rep.b_values) > 0)
    assert rep.expected_exponent == pytest.approx(2.0)
    assert math.isfinite(rep.exponent) and 0 <= rep.r_squared <= 1
    assert len(rep.witness_epsilon) == 3 and rep.witness_nonincreasing
    with pytest.raises(DomainError):
        scaling_law_check(TandemScenario(2, C, CROSS, CBR), 1e-6, [1, 4])
