import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from fbmnc.errors import DomainError, OptimizationError
from fbmnc.numerics import (
    Interval,
    gamma_function,
    gamma_tail_integral,
    gaussian_ccdf,
    lambert_w0,
    log_gamma,
    log_gamma_tail_integral,
    log_gaussian_ccdf,
    logsumexp2,
    minimize_batch,
    minimize_box,
    minimize_scalar,
)


def quad_log_tail_integral(x, xi):
    """log of int_0^inf x**(t**xi) dt by quadrature in s = log t."""
    c = -math.log(x)
    peak = -math.log(c * xi) / xi

    def f(s):
        return math.exp(s - peak - c * math.exp(xi * s))

    lo = peak - 1.0 / xi - 60.0
    hi = (math.log(300.0 + 30.0 / xi) - math.log(c)) / xi
    val, _ = integrate.quad(f, lo, hi, points=[peak], epsabs=0.0, epsrel=1e-13, limit=1000)
    return peak + math.log(val)


@pytest.mark.parametrize("x", [0.01, 0.3, 0.9, 0.999])
@pytest.mark.parametrize("xi", [0.08, 0.5, 1.0, 3.0])
def test_gamma_tail_integral_matches_quadrature(x, xi):
    assert log_gamma_tail_integral(x, xi) == pytest.approx(quad_log_tail_integral(x, xi), abs=1e-9)


def test_gamma_tail_integral_exponential_case():
    # xi = 1: int_0^inf x**t dt = -1/log x
    assert gamma_tail_integral(0.5, 1.0) == pytest.approx(1.0 / math.log(2.0), rel=1e-14)


def test_gamma_tail_integral_rejects_domain():
    for bad in [(0.0, 1.0), (1.0, 1.0), (0.5, 0.0)]:
        with pytest.raises(DomainError):
            gamma_tail_integral(*bad)


def test_gamma_helpers():
    assert gamma_function(5.0) == pytest.approx(24.0)
    assert log_gamma(np.array([1.0, 2.0])) == pytest.approx([0.0, 0.0], abs=1e-15)
    with pytest.raises(DomainError):
        gamma_function(0.0)
    with pytest.raises(DomainError):
        log_gamma(-1.0)


@given(st.floats(-8.0, 8.0))
def test_gaussian_ccdf_matches_erfc(x):
    assert gaussian_ccdf(x) == pytest.approx(0.5 * math.erfc(x / math.sqrt(2.0)), rel=1e-12, abs=1e-300)


def test_log_gaussian_ccdf_far_tail():
    # Mills ratio: log Phi_bar(x) ~ -x^2/2 - log(x sqrt(2 pi))
    x = 40.0
    approx = -x * x / 2 - math.log(x * math.sqrt(2 * math.pi)) + math.log1p(-1 / x**2)
    assert log_gaussian_ccdf(x) == pytest.approx(approx, rel=1e-6)


@given(st.floats(-1.0 / math.e + 1e-9, 1e6))
def test_lambert_w0_inverts(z):
    w = lambert_w0(z)
    assert w >= -1.0
    assert w * math.exp(w) == pytest.approx(z, rel=1e-12, abs=1e-14)


def test_lambert_w0_branch_point_and_domain():
    assert lambert_w0(-1.0 / math.e) == pytest.approx(-1.0, abs=1e-7)
    assert lambert_w0(0.0) == 0.0
    with pytest.raises(DomainError):
        lambert_w0(-0.5)


def test_logsumexp2_handles_neg_inf():
    assert logsumexp2(-np.inf, 0.0) == 0.0
    assert logsumexp2(-np.inf, -np.inf) == -np.inf
    assert logsumexp2(math.log(2.0), math.log(3.0)) == pytest.approx(math.log(5.0))


def test_interval_validation_and_clamp():
    iv = Interval(0.0, 1.0)
    assert 0.5 in iv and 0.0 not in iv
    lo, hi = iv.clamped()
    assert 0.0 < lo < hi < 1.0
    assert iv.clamp(2.0) == hi
    with pytest.raises(DomainError):
        Interval(1.0, 0.0)


@given(st.floats(0.01, 0.99))
def test_minimize_scalar_quadratic(a):
    x, fx = minimize_scalar(lambda v: (v - a) ** 2, Interval(0.0, 1.0), tol=1e-12, vectorized=True)
    assert x == pytest.approx(a, abs=1e-8)
    assert fx == pytest.approx(0.0, abs=1e-15)


def test_minimize_scalar_scalar_callable_and_failure():
    x, _ = minimize_scalar(lambda v: math.cos(v), Interval(2.0, 4.0))
    assert x == pytest.approx(math.pi, abs=1e-7)
    with pytest.raises(OptimizationError):
        minimize_scalar(lambda v: math.inf, Interval(0.0, 1.0))


def test_minimize_batch_independent_problems():
    targets = np.array([0.1, 0.5, 3.0, 70.0])
    x, fx = minimize_batch(lambda v: (np.log(v) - np.log(targets)) ** 2, np.full(4, 1e-3), np.full(4, 1e3), n_scan=64, n_iter=60)
    assert x == pytest.approx(targets, rel=1e-7)
    assert np.all(fx < 1e-12)


def test_minimize_batch_nan_is_infinite():
    x, fx = minimize_batch(lambda v: np.where(v < 0.5, np.nan, (v - 0.7) ** 2), 0.0, 1.0, log_scan=False)
    assert x == pytest.approx(0.7, abs=1e-6)


def test_minimize_box_curved_valley():
    # banana valley with minimum at (0.6, 0.36)
    def f(u):
        x, y = u
        return 100.0 * (y - x * x) ** 2 + (x - 0.6) ** 2

    u, fu = minimize_box(f, 2, tol=1e-10)
    assert u == pytest.approx([0.6, 0.36], abs=1e-6)
    assert fu < 1e-10


def test_minimize_box_against_grid_oracle():
    rng = np.random.default_rng(3)
    c = rng.uniform(0.1, 0.9, size=3)

    def f(u):
        return sum((ui - ci) ** 2 * (i + 1) for i, (ui, ci) in enumerate(zip(u, c))) + 0.1 * np.sin(8 * u[0])

    u, fu = minimize_box(f, 3)
    g = np.linspace(0, 1, 201)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    oracle = f((X, Y, Z)).min()
    assert fu <= oracle + 1e-12


def test_minimize_box_zero_dims_and_failure():
    u, fu = minimize_box(lambda u: 3.0, 0)
    assert u.shape == (0,) and fu == 3.0
    with pytest.raises(OptimizationError):
        minimize_box(lambda u: np.full(np.broadcast(*u).shape, np.nan), 2)
