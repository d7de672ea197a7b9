"""Traffic models in the discrete-time fluid setting.

All rates are in bits per time slot and all burst sizes in bits. Probabilities
derived from these models are invariant to the choice of bit unit, so any
consistent unit works; the CLI converts physical rates using the slot length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError

__all__ = [
    "FbmTraffic",
    "EbbOnOffAggregate",
    "CbrTraffic",
    "fbm_effective_bandwidth",
    "fgn_autocovariance",
    "ebb_from_mean_and_burstiness",
    "ebb_envelope_rate",
    "ebb_critical_theta",
    "multiplexed_fbm",
]


@dataclass(frozen=True)
class FbmTraffic:
    """Arrivals ``A(t) = lam*t + Z(t)`` with ``Var Z(t) = sigma**2 * t**(2*hurst)``."""

    lam: float
    sigma: float
    hurst: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise DomainError(f"mean rate must be >= 0, got {self.lam}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not 0 < self.hurst < 1:
            raise DomainError(f"Hurst parameter must be in (0, 1), got {self.hurst}")

    @property
    def mean_rate(self) -> float:
        return self.lam

    def require_rigorous(self):
        # the Gamma envelope is used for H >= 1/2 (H = 1/2 is the Brownian limit case)
        if self.hurst < 0.5:
            raise DomainError(f"rigorous fBm envelopes need H in [1/2, 1), got H={self.hurst}")


@dataclass(frozen=True)
class EbbOnOffAggregate:
    """``m`` independent two-state Markov on-off sources.

    State 1 is off, state 2 emits ``peak`` bits per slot; ``p12`` and ``p21``
    are the off->on and on->off transition probabilities.
    """

    m: int
    peak: float
    p12: float
    p21: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise DomainError(f"source count must be a positive integer, got {self.m}")
        if not self.peak > 0:
            raise DomainError(f"peak rate must be > 0, got {self.peak}")
        for name in ("p12", "p21"):
            p = getattr(self, name)
            if not 0 < p <= 1:
                raise DomainError(f"{name} must be in (0, 1], got {p}")

    @property
    def p11(self) -> float:
        return 1.0 - self.p12

    @property
    def p22(self) -> float:
        return 1.0 - self.p21

    @property
    def p_on(self) -> float:
        return self.p12 / (self.p12 + self.p21)

    @property
    def source_mean(self) -> float:
        return self.p_on * self.peak

    @property
    def mean_rate(self) -> float:
        """Aggregate mean rate ``m * p_on * peak``."""
        return self.m * self.source_mean

    @property
    def burstiness(self) -> float:
        """Mean time for two state changes, ``1/p12 + 1/p21`` slots."""
        return 1.0 / self.p12 + 1.0 / self.p21


@dataclass(frozen=True)
class CbrTraffic:
    lam: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise DomainError(f"rate must be >= 0, got {self.lam}")

    @property
    def mean_rate(self) -> float:
        return self.lam


def multiplexed_fbm(flow: FbmTraffic, m: int) -> FbmTraffic:
    """Aggregate of ``m`` independent copies of ``flow`` each scaled by ``1/m``.

    The aggregate keeps the mean rate while the standard deviation shrinks to
    ``sigma / sqrt(m)``.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    return FbmTraffic(flow.lam, flow.sigma / math.sqrt(m), flow.hurst)


def fbm_effective_bandwidth(t: FbmTraffic, theta, horizon):
    """``lam + theta * sigma**2 * horizon**(2H-1) / 2``."""
    theta = np.asarray(theta, dtype=float)
    horizon = np.asarray(horizon, dtype=float)
    if np.any(~(theta > 0)):
        raise DomainError("theta must be > 0")
    if np.any(~(horizon > 0)):
        raise DomainError("horizon must be positive")
    out = t.lam + 0.5 * theta * t.sigma**2 * horizon ** (2.0 * t.hurst - 1.0)
    return float(out) if out.ndim == 0 else out


def fgn_autocovariance(t: FbmTraffic, lag):
    """Autocovariance of the unit-slot increments of ``Z`` at integer lag."""
    k = np.abs(np.asarray(lag, dtype=float))
    h2 = 2.0 * t.hurst
    out = 0.5 * t.sigma**2 * (np.abs(k + 1.0) ** h2 - 2.0 * k**h2 + np.abs(k - 1.0) ** h2)
    return float(out) if out.ndim == 0 else out


def ebb_from_mean_and_burstiness(m: int, mean_per_source: float, peak: float, T: float) -> EbbOnOffAggregate:
    """Solve ``p_on = mean/peak`` and ``T = 1/p12 + 1/p21`` for the transition probabilities."""
    if not 0 < mean_per_source < peak:
        raise DomainError(f"need 0 < mean ({mean_per_source}) < peak ({peak})")
    if not T > 0:
        raise DomainError(f"burstiness T must be > 0, got {T}")
    p_on = mean_per_source / peak
    p12 = 1.0 / (T * (1.0 - p_on))
    p21 = 1.0 / (T * p_on)
    if p12 > 1.0 + 1e-12 or p21 > 1.0 + 1e-12:
        t_min = max(1.0 / (1.0 - p_on), 1.0 / p_on)
        raise InfeasibleError(f"T={T} too small for p_on={p_on:.4g}; need T >= {t_min:.6g}")
    return EbbOnOffAggregate(m=m, peak=peak, p12=min(p12, 1.0), p21=min(p21, 1.0))


def ebb_envelope_rate(a: EbbOnOffAggregate, theta):
    """Per-source envelope rate ``rho(theta)`` of a discrete-time on-off source.

    Evaluated as ``peak + log(v)/theta`` where ``v`` is the spectral radius of
    the tilted transition matrix divided by ``exp(theta*peak)``; this keeps
    large ``theta*peak`` finite. Multiply by ``a.m`` for the aggregate.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(~(theta > 0)):
        raise DomainError("theta must be > 0")
    u = np.exp(-theta * a.peak)
    s = a.p11 * u + a.p22
    disc = s * s - 4.0 * (a.p11 + a.p22 - 1.0) * u
    v = 0.5 * (s + np.sqrt(np.maximum(disc, 0.0)))
    out = a.peak + np.log(v) / theta
    # clamp round-off outside [mean, peak]
    out = np.clip(out, a.source_mean, a.peak)
    return float(out) if out.ndim == 0 else out


def ebb_critical_theta(a: EbbOnOffAggregate, rate, *, theta_cap=None):
    """Largest ``theta`` with ``a.m * rho(theta) < rate`` (elementwise in ``rate``).

    Returns ``theta_cap`` where the aggregate peak does not exceed ``rate``, so
    every ``theta`` is admissible. ``rate`` must exceed the aggregate mean.
    """
    rate = np.asarray(rate, dtype=float)
    if np.any(~(rate > a.mean_rate)):
        raise DomainError("rate must exceed the aggregate mean rate")
    if theta_cap is None:
        theta_cap = 700.0 / a.peak
    lo = np.zeros_like(rate)
    hi = np.full_like(rate, theta_cap)
    unbounded = a.m * ebb_envelope_rate(a, hi) < rate
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        ok = a.m * ebb_envelope_rate(a, np.maximum(mid, 1e-300)) < rate
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    out = np.where(unbounded, theta_cap, lo)
    return float(out) if out.ndim == 0 else out
