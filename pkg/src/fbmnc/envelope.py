"""Arrival envelopes for fBm and on-off traffic and their overflow profiles.

An overflow profile ``eps(b)`` bounds the probability that arrivals exceed an
envelope by more than ``b``. Profiles here are closed-form parameter bundles;
they evaluate in the log domain because the probabilities of interest go far
below 1e-12. Profile fields may be numpy arrays, in which case evaluation
broadcasts; the optimizers in :mod:`fbmnc.netcalc` rely on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ComposabilityError, DomainError, InstabilityError
from .numerics import gaussian_ccdf, log_gamma_tail_integral
from .traffic import EbbOnOffAggregate, FbmTraffic, ebb_envelope_rate

__all__ = [
    "OverflowProfile",
    "FbmRigorous",
    "FbmAsymptotic",
    "EbbExponential",
    "Zero",
    "AffineEnvelope",
    "fbm_pointwise_envelope",
    "fbm_sample_path_envelope",
    "pointwise_epsilon",
    "pointwise_violation_exact",
    "sample_path_epsilon",
    "log_sample_path_epsilon",
    "sample_path_partial_sums",
    "log_vartheta",
    "log_upsilon",
    "fbm_affine_profile",
    "fbm_affine_profile_asymptotic",
    "ebb_affine_profile",
]


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _positive_log(b):
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(b > 0, np.log(np.where(b > 0, b, 1.0)), -np.inf)


class OverflowProfile:
    """Decreasing bound ``eps(b)`` on a violation probability."""

    family = "abstract"

    def log_eps(self, b):
        raise NotImplementedError

    def __call__(self, b):
        with np.errstate(over="ignore"):
            return _out(np.exp(self.log_eps(b)))

    def eps(self, b):
        return self(b)

    @property
    def integrable(self) -> bool:
        raise NotImplementedError

    def relaxed(self, delta) -> "OverflowProfile":
        """Sample-path deficit profile ``(1/delta) * int_b^inf eps(x) dx``."""
        raise NotImplementedError

    def log_inverse(self, log_target):
        """Smallest ``b >= 0`` with ``log_eps(b) <= log_target``."""
        raise NotImplementedError


@dataclass(frozen=True)
class FbmRigorous(OverflowProfile):
    """Power-law profile from the Gamma sample-path bound.

    Unrelaxed: ``Gamma(1/(2beta)) / (2 beta vartheta**(1/(2beta))) * b**(-(1-H-beta)/beta)``.
    With ``delta`` set it is the sample-path deficit profile obtained by
    integrating the unrelaxed one and dividing by ``delta``.
    """

    vartheta: float
    beta: float
    hurst: float
    delta: float | None = None

    family = "fbm-rigorous"

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if np.any(~((beta > 0) & (beta < 1.0 - self.hurst))):
            raise DomainError(f"beta must lie in (0, 1-H) = (0, {1 - self.hurst:g})")
        if np.any(~(np.asarray(self.vartheta, dtype=float) > 0)):
            raise DomainError("vartheta must be > 0")
        if self.delta is not None:
            if np.any(~(np.asarray(self.delta, dtype=float) > 0)):
                raise DomainError("relaxation rate delta must be > 0")
            if np.any(beta >= 0.5 * (1.0 - self.hurst)):
                raise ComposabilityError("relaxed fBm profile needs beta < (1-H)/2")

    @property
    def decay(self):
        """Power-law exponent ``k`` in ``eps(b) = K * b**(-k)``."""
        lift = 2.0 if self.delta is not None else 1.0
        return _out((1.0 - self.hurst - lift * np.asarray(self.beta)) / self.beta)

    @property
    def log_coefficient(self):
        beta = np.asarray(self.beta, dtype=float)
        base = special.gammaln(0.5 / beta) - np.log(self.vartheta) / (2.0 * beta)
        if self.delta is None:
            return _out(base - np.log(2.0 * beta))
        return _out(base - math.log(2.0) - np.log(self.delta) - np.log(1.0 - self.hurst - 2.0 * beta))

    @property
    def integrable(self) -> bool:
        return bool(np.all(np.asarray(self.decay) > 1.0))

    def log_eps(self, b):
        return _out(self.log_coefficient - self.decay * _positive_log(b))

    def relaxed(self, delta) -> "FbmRigorous":
        if self.delta is not None:
            raise ComposabilityError("profile is already relaxed")
        if not self.integrable:
            raise ComposabilityError(
                f"profile is not integrable: beta={self.beta} must be < (1-H)/2 = {(1 - self.hurst) / 2:g}"
            )
        return FbmRigorous(self.vartheta, self.beta, self.hurst, delta)

    def log_inverse(self, log_target):
        with np.errstate(over="ignore"):
            return _out(np.exp((self.log_coefficient - np.asarray(log_target)) / self.decay))


@dataclass(frozen=True)
class FbmAsymptotic(OverflowProfile):
    """Weibull profile ``exp(-upsilon * b**(2-2H))`` from the largest-term approximation."""

    upsilon: float
    hurst: float
    delta: float | None = None

    family = "fbm-asymptotic"

    def __post_init__(self):
        if np.any(~(np.asarray(self.upsilon, dtype=float) > 0)):
            raise DomainError("upsilon must be > 0")
        if self.delta is not None and np.any(~(np.asarray(self.delta, dtype=float) > 0)):
            raise DomainError("relaxation rate delta must be > 0")

    @property
    def shape(self) -> float:
        return 2.0 - 2.0 * self.hurst

    @property
    def integrable(self) -> bool:
        return True

    def log_eps(self, b):
        b = np.maximum(np.asarray(b, dtype=float), 0.0)
        k = self.shape
        z = self.upsilon * b**k
        if self.delta is None:
            return _out(-z)
        s = 1.0 / k
        # int_b^inf exp(-u x^k) dx = Gamma(s) Q(s, u b^k) / (k u^s)
        with np.errstate(divide="ignore"):
            log_q = np.log(special.gammaincc(s, z))
        tail = (s - 1.0) * np.log(np.maximum(z, 1e-300)) - z + np.log1p((s - 1.0) / np.maximum(z, 1.0))
        log_upper = np.where(np.isfinite(log_q), special.gammaln(s) + log_q, tail)
        return _out(log_upper - np.log(k) - s * np.log(self.upsilon) - np.log(self.delta))

    def relaxed(self, delta) -> "FbmAsymptotic":
        if self.delta is not None:
            raise ComposabilityError("profile is already relaxed")
        return FbmAsymptotic(self.upsilon, self.hurst, delta)

    def log_inverse(self, log_target):
        log_target = np.asarray(log_target, dtype=float)
        if self.delta is None:
            return _out((np.maximum(-log_target, 0.0) / self.upsilon) ** (1.0 / self.shape))
        lo = np.zeros(np.broadcast(log_target, np.asarray(self.upsilon)).shape)
        hi = np.ones_like(lo)
        for _ in range(200):
            bad = self.log_eps(hi) > log_target
            if not np.any(bad):
                break
            hi = np.where(bad, 2.0 * hi, hi)
        zero_ok = self.log_eps(lo) <= log_target
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            ok = self.log_eps(mid) <= log_target
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        return _out(np.where(zero_ok, 0.0, hi))


@dataclass(frozen=True)
class EbbExponential(OverflowProfile):
    """``prefactor * exp(-theta * b)``."""

    theta: float
    prefactor: float

    family = "ebb-exponential"

    def __post_init__(self):
        if np.any(~(np.asarray(self.theta, dtype=float) > 0)):
            raise DomainError("theta must be > 0")
        if np.any(~(np.asarray(self.prefactor, dtype=float) > 0)):
            raise DomainError("prefactor must be > 0")

    @property
    def integrable(self) -> bool:
        return True

    def log_eps(self, b):
        b = np.maximum(np.asarray(b, dtype=float), 0.0)
        return _out(np.log(self.prefactor) - self.theta * b)

    def relaxed(self, delta) -> "EbbExponential":
        if np.any(~(np.asarray(delta, dtype=float) > 0)):
            raise DomainError("relaxation rate delta must be > 0")
        with np.errstate(over="ignore"):
            pref = np.minimum(np.asarray(self.prefactor) / (np.asarray(delta) * self.theta), np.finfo(float).max)
        return EbbExponential(self.theta, pref)

    def log_inverse(self, log_target):
        return _out(np.maximum((np.log(self.prefactor) - np.asarray(log_target)) / self.theta, 0.0))


@dataclass(frozen=True)
class Zero(OverflowProfile):
    """Deterministic traffic: the envelope is never violated."""

    family = "zero"

    @property
    def integrable(self) -> bool:
        return True

    def log_eps(self, b):
        return _out(np.full(np.shape(b), -np.inf))

    def relaxed(self, delta) -> "Zero":
        return self

    def log_inverse(self, log_target):
        return _out(np.zeros(np.shape(log_target)))


@dataclass(frozen=True)
class AffineEnvelope:
    """Envelope ``E(t) = rate * t`` with an overflow profile."""

    rate: float
    profile: OverflowProfile

    def __call__(self, t):
        return _out(self.rate * np.asarray(t, dtype=float))


def _check_eps(name, p):
    if np.any(~((np.asarray(p) > 0) & (np.asarray(p) < 1))):
        raise DomainError(f"{name} must lie in (0, 1)")


def fbm_pointwise_envelope(t: FbmTraffic, eps_p, horizon):
    """``lam*t + sqrt(-2 log eps_p) * sigma * t**H``; exceeded with probability at most ``eps_p`` at each ``t``."""
    _check_eps("eps_p", eps_p)
    tt = np.asarray(horizon, dtype=float)
    return _out(t.lam * tt + np.sqrt(-2.0 * np.log(eps_p)) * t.sigma * tt**t.hurst)


def fbm_sample_path_envelope(t: FbmTraffic, beta, eta, horizon):
    """``lam*t + sqrt(-2 log eta) * sigma * t**(H+beta)``.

    ``beta = 0`` gives the point-wise envelope with ``eps_p = eta``.
    """
    _check_beta(t, beta, allow_zero=True)
    _check_eps("eta", eta)
    tt = np.asarray(horizon, dtype=float)
    if np.any(tt < 0):
        raise DomainError("horizon must be >= 0")
    return _out(t.lam * tt + np.sqrt(-2.0 * np.log(eta)) * t.sigma * tt ** (t.hurst + np.asarray(beta)))


def pointwise_epsilon(beta, eta, horizon):
    """Chernoff bound ``eta**(t**(2 beta))`` on ``P[A(t) > E(t)]``."""
    _check_eps("eta", eta)
    tt = np.asarray(horizon, dtype=float)
    return _out(np.exp(np.log(eta) * tt ** (2.0 * np.asarray(beta))))


def pointwise_violation_exact(t: FbmTraffic, beta, eta, horizon):
    """Exact ``P[A(t) > E(t)]`` from the Gaussian marginal, ``Phi_bar(sqrt(-2 log eta) t**beta)``."""
    _check_eps("eta", eta)
    tt = np.asarray(horizon, dtype=float)
    return gaussian_ccdf(np.sqrt(-2.0 * np.log(eta)) * tt ** np.asarray(beta))


def _check_beta(t: FbmTraffic, beta, *, allow_zero=False, hurst=None):
    h = t.hurst if t is not None else hurst
    beta = np.asarray(beta, dtype=float)
    lower_ok = beta >= 0 if allow_zero else beta > 0
    upper_ok = beta < 1.0 - h if h is not None else beta < 1.0
    if np.any(~(lower_ok & upper_ok)):
        bound = f"{1 - h:g}" if h is not None else "1"
        raise DomainError(f"beta must lie in {'[' if allow_zero else '('}0, {bound})")


def log_sample_path_epsilon(beta, eta, hurst=None):
    _check_beta(None, beta, hurst=hurst)
    _check_eps("eta", eta)
    return log_gamma_tail_integral(eta, 2.0 * np.asarray(beta))


def sample_path_epsilon(beta, eta, hurst=None):
    """Sample-path violation bound ``Gamma(1/(2beta)) / (2 beta (-log eta)**(1/(2beta)))``."""
    return _out(np.exp(log_sample_path_epsilon(beta, eta, hurst)))


def sample_path_partial_sums(beta, eta, horizon: int):
    """``sum_{tau=1}^{t} eta**(tau**(2 beta))`` for ``t = 1..horizon``."""
    tau = np.arange(1, int(horizon) + 1, dtype=float)
    return np.cumsum(pointwise_epsilon(beta, eta, tau))


def log_vartheta(t: FbmTraffic, r, beta):
    """log of ``(1/(2 sigma^2)) ((r-lam)/(H+beta))**(2(H+beta)) (1/(1-(H+beta)))**(2-2(H+beta))``."""
    a = t.hurst + np.asarray(beta, dtype=float)
    r = np.asarray(r, dtype=float)
    return _out(
        -math.log(2.0 * t.sigma**2) + 2.0 * a * np.log((r - t.lam) / a) - (2.0 - 2.0 * a) * np.log(1.0 - a)
    )


def log_upsilon(t: FbmTraffic, r):
    return log_vartheta(t, r, 0.0)


def _check_rate(t, r):
    if np.any(~(np.asarray(r, dtype=float) > t.lam)):
        raise InstabilityError(f"envelope rate must exceed the mean rate {t.lam:g}")


def fbm_affine_profile(t: FbmTraffic, r, beta) -> FbmRigorous:
    """Overflow profile of the affine envelope ``E(t) = r t`` for fBm traffic."""
    t.require_rigorous()
    _check_rate(t, r)
    _check_beta(t, beta)
    return FbmRigorous(np.exp(log_vartheta(t, r, beta)), beta, t.hurst)


def fbm_affine_profile_asymptotic(t: FbmTraffic, r) -> FbmAsymptotic:
    _check_rate(t, r)
    return FbmAsymptotic(np.exp(log_upsilon(t, r)), t.hurst)


def ebb_affine_profile(a: EbbOnOffAggregate, r, theta) -> EbbExponential:
    """``exp(-theta b) / (theta (r - m rho(theta)))``, valid while ``m rho(theta) < r``."""
    theta = np.asarray(theta, dtype=float)
    slack = np.asarray(r, dtype=float) - a.m * ebb_envelope_rate(a, theta)
    if np.any(~(slack > 0)):
        bad = np.atleast_1d(np.broadcast_to(theta, np.shape(slack)))[np.atleast_1d(~(slack > 0))]
        raise InstabilityError(f"m*rho(theta) >= r for theta={float(bad[0]):g}")
    return EbbExponential(theta, 1.0 / (theta * slack))
