"""Single-server backlog and delay bounds for fBm and on-off traffic."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .envelope import FbmRigorous, log_vartheta
from .errors import DomainError, InstabilityError
from .numerics import _golden_iterations, lambert_w0, minimize_batch
from .traffic import EbbOnOffAggregate, FbmTraffic, ebb_critical_theta, ebb_envelope_rate

__all__ = [
    "BETA_FLOOR",
    "BacklogBoundResult",
    "EbbBoundResult",
    "NearOptimalBeta",
    "fbm_backlog_eta",
    "log_fbm_backlog_eta",
    "fbm_backlog_violation",
    "fbm_backlog_quantile",
    "fbm_delay_violation",
    "asymptotic_epsilon",
    "log_asymptotic_epsilon",
    "asymptotic_backlog_quantile",
    "most_probable_timescale",
    "busy_period_timescale",
    "stirling_epsilon",
    "log_stirling_epsilon",
    "near_optimal_beta",
    "chi",
    "closed_form_epsilon",
    "log_closed_form_epsilon",
    "ebb_backlog_violation",
    "backlog_sweep",
]

# beta search domain is [BETA_FLOOR, 1-H-BETA_FLOOR]
BETA_FLOOR = 1e-6
_TOL = 1e-10
_SCAN = 256


@dataclass(frozen=True)
class BacklogBoundResult:
    b: float
    epsilon: float
    log_epsilon: float
    beta_opt: float
    eta_opt: float
    tau_star: float


@dataclass(frozen=True)
class EbbBoundResult:
    b: float
    epsilon: float
    log_epsilon: float
    theta_opt: float


@dataclass(frozen=True)
class NearOptimalBeta:
    linear: float
    lambert: float | None
    lambert_available: bool


def _stable(C, t):
    if not C > t.mean_rate:
        raise InstabilityError(f"capacity {C:g} must exceed the mean rate {t.mean_rate:g}")


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _beta_domain(hurst):
    return BETA_FLOOR, 1.0 - hurst - BETA_FLOOR


def log_fbm_backlog_eta(C, t: FbmTraffic, beta, b):
    """``log eta`` making the sample-path envelope tangent to ``b + C t``."""
    _stable(C, t)
    beta = np.asarray(beta, dtype=float)
    if np.any(~((beta >= 0) & (beta < 1 - t.hurst))):
        raise DomainError(f"beta must lie in [0, {1 - t.hurst:g})")
    b = np.asarray(b, dtype=float)
    if np.any(~(b > 0)):
        raise DomainError("b must be > 0")
    a = t.hurst + beta
    # vartheta * b**(2-2a) as a product of powers; going through logs loses ~10 ulp
    with np.errstate(over="ignore"):
        return _out(-((C - t.lam) / a) ** (2.0 * a) * (b / (1.0 - a)) ** (2.0 - 2.0 * a) / (2.0 * t.sigma**2))


def fbm_backlog_eta(C, t: FbmTraffic, beta, b):
    return _out(np.exp(log_fbm_backlog_eta(C, t, beta, b)))


def log_asymptotic_epsilon(C, t: FbmTraffic, b):
    """Weibull approximation ``-(1/(2 sigma^2)) ((C-lam)/H)**(2H) (b/(1-H))**(2-2H)``."""
    _stable(C, t)
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise DomainError("b must be >= 0")
    h = t.hurst
    return _out(-((C - t.lam) / h) ** (2 * h) * (b / (1.0 - h)) ** (2.0 - 2.0 * h) / (2.0 * t.sigma**2))


def asymptotic_epsilon(C, t: FbmTraffic, b):
    return _out(np.exp(log_asymptotic_epsilon(C, t, b)))


def asymptotic_backlog_quantile(C, t: FbmTraffic, eps):
    """Buffer ``b`` at which the Weibull approximation equals ``eps``."""
    _stable(C, t)
    h = t.hurst
    scale = ((C - t.lam) / h) ** (2 * h) / (2.0 * t.sigma**2 * (1.0 - h) ** (2.0 - 2.0 * h))
    return _out((-np.log(eps) / scale) ** (1.0 / (2.0 - 2.0 * h)))


def _rigorous_log_eps(C, t, beta, b):
    # log eps_s of the tangent Gamma bound; beta and b broadcast
    return FbmRigorous(np.exp(log_vartheta(t, C, beta)), beta, t.hurst).log_eps(b)


def _optimize_beta(objective, hurst, shape, tol=_TOL):
    lo, hi = _beta_domain(hurst)
    return minimize_batch(
        objective,
        np.full(shape, lo),
        np.full(shape, hi),
        n_scan=_SCAN,
        n_iter=_golden_iterations(tol, _SCAN),
    )


def fbm_backlog_violation(C, t: FbmTraffic, b, *, tol: float = _TOL):
    """Gamma-envelope backlog bound ``P[B > b]`` minimized over ``beta``.

    ``b`` may be an array; the result then holds arrays of the same shape.
    """
    _stable(C, t)
    t.require_rigorous()
    b_arr = np.asarray(b, dtype=float)
    if np.any(~(b_arr > 0)):
        raise DomainError("b must be > 0")
    beta, log_eps = _optimize_beta(lambda x: _rigorous_log_eps(C, t, x, b_arr), t.hurst, b_arr.shape, tol)
    log_eta = log_fbm_backlog_eta(C, t, beta, b_arr)
    a = t.hurst + beta
    tau = (np.sqrt(-2.0 * log_eta) * t.sigma * a / (C - t.lam)) ** (1.0 / (1.0 - a))
    return BacklogBoundResult(
        b=_out(b_arr),
        epsilon=_out(np.exp(np.minimum(log_eps, 0.0))),
        log_epsilon=_out(log_eps),
        beta_opt=_out(beta),
        eta_opt=_out(np.exp(log_eta)),
        tau_star=_out(tau),
    )


def fbm_backlog_quantile(C, t: FbmTraffic, eps, *, tol: float = _TOL):
    """Smallest ``b`` whose optimized Gamma bound is at most ``eps``.

    For each ``beta`` the power-law profile inverts in closed form, so the
    result is the minimum over ``beta`` of those inverses.
    Returns ``(b, beta_opt)``.
    """
    _stable(C, t)
    t.require_rigorous()
    log_target = np.log(np.asarray(eps, dtype=float))

    def log_b(beta):
        prof = FbmRigorous(np.exp(log_vartheta(t, C, beta)), beta, t.hurst)
        return (prof.log_coefficient - log_target) / prof.decay

    beta, lb = _optimize_beta(log_b, t.hurst, log_target.shape, tol)
    return _out(np.exp(lb)), _out(beta)


def _sup_gap(sigma, a, slack):
    """``sup_t sigma t**a - slack t`` found by a log-spaced search over t."""
    lo = np.full(np.shape(a), 1e-30)
    hi = np.full(np.shape(a), 1e30)
    _, neg = minimize_batch(lambda s: -(sigma * s**a - slack * s), lo, hi, n_scan=_SCAN, n_iter=80, margin=0.0)
    return -neg


def fbm_delay_violation(C, t: FbmTraffic, d, *, tol: float = _TOL):
    """Bound on ``P[W > d]`` at a constant-rate server, minimized over ``beta``.

    For each ``beta`` the envelope scale ``kappa = sqrt(-2 log eta)`` is set
    so that the largest horizontal distance between the envelope and ``C t``
    equals ``d``. The distance scales as ``kappa**(1/(1-H-beta))`` times the
    distance at ``kappa = 1``, which is found numerically.
    """
    _stable(C, t)
    t.require_rigorous()
    d = float(d)
    if not d > 0:
        raise DomainError("d must be > 0")

    def log_eps(beta):
        a = t.hurst + beta
        unit_gap = _sup_gap(t.sigma, a, C - t.lam) / C
        # near beta = 1-H the gap under/overflows; those betas are never optimal
        with np.errstate(invalid="ignore", divide="ignore"):
            log_unit_gap = np.where(unit_gap > 0, np.log(np.where(unit_gap > 0, unit_gap, 1.0)), np.nan)
        log_kappa = (1.0 - a) * (math.log(d) - log_unit_gap)
        log_minus_log_eta = 2.0 * log_kappa - math.log(2.0)
        return special.gammaln(0.5 / beta) - np.log(2.0 * beta) - log_minus_log_eta / (2.0 * beta)

    _, value = _optimize_beta(log_eps, t.hurst, (), tol)
    return float(np.exp(min(float(value), 0.0)))


def most_probable_timescale(C, t: FbmTraffic, b, beta=0.0, eta=None):
    """Tangency time ``((sqrt(-2 log eta) sigma (H+beta)) / (C-lam))**(1/(1-H-beta))``.

    ``eta`` defaults to the tangent value for buffer ``b``.
    """
    _stable(C, t)
    if eta is None:
        log_eta = log_fbm_backlog_eta(C, t, beta, b)
    else:
        if not 0 < eta < 1:
            raise DomainError("eta must lie in (0, 1)")
        log_eta = math.log(eta)
    a = t.hurst + beta
    return _out((np.sqrt(-2.0 * log_eta) * t.sigma * a / (C - t.lam)) ** (1.0 / (1.0 - a)))


def busy_period_timescale(C, t: FbmTraffic, eps_p):
    """Time where the point-wise envelope meets ``C t``."""
    _stable(C, t)
    if not 0 < eps_p < 1:
        raise DomainError("eps_p must lie in (0, 1)")
    return (math.sqrt(-2.0 * math.log(eps_p)) * t.sigma / (C - t.lam)) ** (1.0 / (1.0 - t.hurst))


def log_stirling_epsilon(beta, eta):
    beta = np.asarray(beta, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(~((beta > 0) & (beta < 1))):
        raise DomainError("beta must lie in (0, 1)")
    if np.any(~((eta > 0) & (eta < 1))):
        raise DomainError("eta must lie in (0, 1)")
    return _out(
        0.5 * math.log(math.pi)
        - 0.5 * np.log(beta)
        - np.log(2.0 * math.e * beta * -np.log(eta)) / (2.0 * beta)
    )


def stirling_epsilon(beta, eta):
    """Stirling form ``sqrt(pi) / (sqrt(beta) (2 e beta (-log eta))**(1/(2 beta)))``."""
    return _out(np.exp(log_stirling_epsilon(beta, eta)))


def near_optimal_beta(eps_a: float) -> NearOptimalBeta:
    """``1/(2(-log eps_a))`` and, when real, the Lambert root ``-W0(1/(2 log eps_a))``."""
    if not 0 < eps_a < 1:
        raise DomainError("eps_a must lie in (0, 1)")
    log_a = math.log(eps_a)
    linear = 1.0 / (2.0 * -log_a)
    if log_a > -math.e / 2.0:
        warnings.warn(
            f"eps_a={eps_a:g} >= exp(-e/2): no real stationary point, returning the linear approximation only",
            RuntimeWarning,
            stacklevel=2,
        )
        return NearOptimalBeta(linear, None, False)
    return NearOptimalBeta(linear, -lambert_w0(1.0 / (2.0 * log_a)), True)


def chi(H, beta):
    """``(H^H (1-H)^(1-H) / ((H+beta)^(H+beta) (1-H-beta)^(1-H-beta)))**2``."""
    H = np.asarray(H, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(~((H > 0) & (H < 1))):
        raise DomainError("H must lie in (0, 1)")
    if np.any(~((beta >= 0) & (beta < 1 - H))):
        raise DomainError("beta must lie in [0, 1-H)")
    a = H + beta
    log_num = special.xlogy(H, H) + special.xlogy(1 - H, 1 - H)
    log_den = special.xlogy(a, a) + special.xlogy(1 - a, 1 - a)
    return _out(np.exp(2.0 * (log_num - log_den)))


def log_closed_form_epsilon(C, t: FbmTraffic, b):
    _stable(C, t)
    b = np.asarray(b, dtype=float)
    if np.any(~(b > 0)):
        raise DomainError("b must be > 0")
    log_a = np.asarray(log_asymptotic_epsilon(C, t, b))
    beta_star = 1.0 / (-2.0 * log_a)
    if np.any(beta_star >= 1 - t.hurst):
        raise DomainError("buffer too small: near-optimal beta leaves (0, 1-H)")
    log_chi = np.log(chi(t.hurst, beta_star))
    return _out(np.log(b / (C - t.lam)) + (1.0 + log_chi) * log_a + 0.5 * np.log(2.0 * math.pi * -log_a))


def closed_form_epsilon(C, t: FbmTraffic, b):
    """Near-optimal sample-path bound ``(b/(C-lam)) eps_a**(1+log chi) sqrt(2 pi (-log eps_a))``."""
    return _out(np.exp(log_closed_form_epsilon(C, t, b)))


def ebb_backlog_violation(C, a: EbbOnOffAggregate, b, *, tol: float = _TOL):
    """``min_theta exp(-theta b) / (theta (C - m rho(theta)))`` over ``m rho(theta) < C``."""
    if not C > a.mean_rate:
        raise InstabilityError(f"capacity {C:g} must exceed the aggregate mean {a.mean_rate:g}")
    b_arr = np.asarray(b, dtype=float)
    if np.any(b_arr < 0):
        raise DomainError("b must be >= 0")
    if a.m * a.peak <= C:
        # the queue never builds up
        zero = np.zeros_like(b_arr)
        return EbbBoundResult(_out(b_arr), _out(zero), _out(zero - np.inf), math.inf)
    theta_c = ebb_critical_theta(a, C)

    def log_eps(theta):
        slack = C - a.m * ebb_envelope_rate(a, theta)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(slack > 0, -theta * b_arr - np.log(theta * slack), np.inf)

    theta, value = minimize_batch(
        log_eps,
        np.zeros(b_arr.shape),
        np.full(b_arr.shape, theta_c),
        n_scan=_SCAN,
        n_iter=_golden_iterations(tol, _SCAN),
    )
    return EbbBoundResult(_out(b_arr), _out(np.exp(np.minimum(value, 0.0))), _out(value), _out(theta))


def backlog_sweep(C, t: FbmTraffic, b_values):
    """Rows of (b, rigorous eps, asymptotic eps, beta, eta, tau*) for a buffer sweep."""
    b_values = np.asarray(b_values, dtype=float)
    res = fbm_backlog_violation(C, t, b_values)
    eps_a = asymptotic_epsilon(C, t, b_values)
    return {
        "b": b_values,
        "epsilon_rigorous": np.atleast_1d(res.epsilon),
        "epsilon_asymptotic": np.atleast_1d(eps_a),
        "beta_opt": np.atleast_1d(res.beta_opt),
        "eta_opt": np.atleast_1d(res.eta_opt),
        "tau_star": np.atleast_1d(res.tau_star),
    }
