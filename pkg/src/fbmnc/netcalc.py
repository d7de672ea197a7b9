"""Leftover service curves, network composition and end-to-end delay bounds.

Topology: a through flow crosses ``n`` identical constant-rate servers; at
each one it competes with independent cross traffic that leaves after that
hop. The service left for the through flow at a hop is ``(C - r) t`` with the
overflow profile of the cross traffic envelope ``r t`` as deficit. Hops
``1..n-1`` are relaxed by rate ``delta`` each (``Delta = (n-1) delta`` in
total) so that their deficits compose; the network service curve is
``(C - r - Delta) t``.

Free parameters (cross envelope rate, ``Delta``, envelope parameters, the
split of the total slack between terms) are chosen by
:func:`fbmnc.numerics.minimize_box`. The returned bound is always re-evaluated
at the chosen parameters with precise inner searches, so optimizer error
can only loosen a bound, never invalidate it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .envelope import (
    AffineEnvelope,
    EbbExponential,
    FbmAsymptotic,
    FbmRigorous,
    OverflowProfile,
    Zero,
    ebb_affine_profile,
    fbm_affine_profile,
    fbm_affine_profile_asymptotic,
    log_upsilon,
    log_vartheta,
)
from .errors import ComposabilityError, DomainError, InfeasibleError, InstabilityError
from .numerics import _golden_iterations, minimize_batch, minimize_box
from .traffic import CbrTraffic, EbbOnOffAggregate, FbmTraffic, ebb_critical_theta, ebb_envelope_rate

__all__ = [
    "RateServiceCurve",
    "TandemScenario",
    "NetworkProfile",
    "E2EBound",
    "ScalingReport",
    "fbm_leftover",
    "fbm_leftover_asymptotic",
    "ebb_leftover",
    "through_envelope",
    "single_hop_delay_violation",
    "log_single_hop_delay_violation",
    "sample_path_deficit",
    "compose_homogeneous",
    "fbm_network_service",
    "ebb_network_service",
    "e2e_delay_violation",
    "e2e_delay_bound",
    "network_near_optimal_beta",
    "psi",
    "network_stirling_profile",
    "log_network_stirling_profile",
    "simplified_network_quantile",
    "scaling_law_check",
]

BETA_FLOOR = 1e-6
_LOGIT_SPAN = 30.0
_SPLIT_SCAN = 64
_SPLIT_TOL = 1e-10


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _logit_unit(u):
    return _sigmoid(_LOGIT_SPAN * (2.0 * np.asarray(u) - 1.0))


def _log_unit(u, lo, hi):
    return lo * (hi / lo) ** np.asarray(u)


@dataclass(frozen=True)
class RateServiceCurve:
    """``S(t) = rate * t`` with a deficit profile."""

    rate: float
    deficit: OverflowProfile

    def __post_init__(self):
        if not self.rate >= 0:
            raise DomainError("service rate must be >= 0")

    def __call__(self, t):
        return _out(self.rate * np.asarray(t, dtype=float))


def _check_cross_rate(C, lam, r):
    if not lam < r < C:
        raise InfeasibleError(f"cross envelope rate r={r:g} must lie in ({lam:g}, {C:g})")


def fbm_leftover(C, cross: FbmTraffic, r, beta) -> RateServiceCurve:
    """Leftover service ``(C - r) t`` under fBm cross traffic with the Gamma-envelope deficit."""
    _check_cross_rate(C, cross.lam, r)
    return RateServiceCurve(C - r, fbm_affine_profile(cross, r, beta))


def fbm_leftover_asymptotic(C, cross: FbmTraffic, r) -> RateServiceCurve:
    _check_cross_rate(C, cross.lam, r)
    return RateServiceCurve(C - r, fbm_affine_profile_asymptotic(cross, r))


def ebb_leftover(C, cross: EbbOnOffAggregate, r, theta) -> RateServiceCurve:
    _check_cross_rate(C, cross.mean_rate, r)
    return RateServiceCurve(C - r, ebb_affine_profile(cross, r, theta))


def through_envelope(through, r=None, param=None) -> AffineEnvelope:
    """Affine envelope ``r t`` of the through traffic.

    CBR ignores ``param`` and defaults ``r`` to its rate; on-off traffic takes
    ``theta`` and fBm takes ``beta`` as ``param``.
    """
    if isinstance(through, CbrTraffic):
        return AffineEnvelope(through.lam if r is None else r, Zero())
    if r is None or param is None:
        raise DomainError("envelope rate and parameter are required for random through traffic")
    if isinstance(through, EbbOnOffAggregate):
        return AffineEnvelope(r, ebb_affine_profile(through, r, param))
    if isinstance(through, FbmTraffic):
        return AffineEnvelope(r, fbm_affine_profile(through, r, param))
    raise DomainError(f"unsupported through traffic {type(through).__name__}")


def _min_split(log_f, log_g, total):
    """``min_{x+y=total} f(x) + g(y)`` in log form, ``total`` broadcastable."""
    total = np.asarray(total, dtype=float)

    def obj(z):
        w = _sigmoid(z)
        return np.logaddexp(log_f(w * total), log_g((1.0 - w) * total))

    z, value = minimize_batch(
        obj,
        np.full(total.shape, -_LOGIT_SPAN),
        np.full(total.shape, _LOGIT_SPAN),
        n_scan=_SPLIT_SCAN,
        n_iter=_golden_iterations(_SPLIT_TOL, _SPLIT_SCAN) + 8,
        log_scan=False,
        margin=0.0,
    )
    # the split may also put everything on one side
    ends = np.minimum(np.logaddexp(log_f(total), log_g(np.zeros_like(total))),
                      np.logaddexp(log_f(np.zeros_like(total)), log_g(total)))
    return np.minimum(value, ends), _sigmoid(z)


def log_single_hop_delay_violation(s: RateServiceCurve, through: AffineEnvelope, d):
    """Logarithm of :func:`single_hop_delay_violation` (before clipping at 1)."""
    if not through.rate <= s.rate:
        raise InstabilityError(f"through envelope rate {through.rate:g} exceeds service rate {s.rate:g}")
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError("d must be >= 0")
    total = d * s.rate
    if isinstance(through.profile, Zero):
        return _out(s.deficit.log_eps(total))
    value, _ = _min_split(through.profile.log_eps, s.deficit.log_eps, total)
    return _out(value)


def single_hop_delay_violation(s: RateServiceCurve, through: AffineEnvelope, d):
    """``min_{b_th + b_cr = d * rate} eps_th(b_th) + eps_s(b_cr)`` for a fixed service curve."""
    return _out(np.exp(np.minimum(log_single_hop_delay_violation(s, through, d), 0.0)))


def sample_path_deficit(s: RateServiceCurve, delta) -> OverflowProfile:
    """``(1/delta) * int_b^inf eps(x) dx`` of the service curve's deficit."""
    if np.any(~(np.asarray(delta, dtype=float) > 0)):
        raise DomainError("delta must be > 0")
    return s.deficit.relaxed(delta)


@dataclass(frozen=True)
class NetworkProfile(OverflowProfile):
    """Deficit of ``n`` homogeneous hops: ``inf_x (n-1) eps_delta((b-x)/(n-1)) + eps(x)``.

    ``delta = delta_total / (n-1)``. Splitting the relaxed share equally is
    optimal because the relaxed profile is convex.
    """

    hop: OverflowProfile
    n: int
    delta_total: float | None = None

    family = "network"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if self.n > 1:
            if self.delta_total is None or not np.all(np.asarray(self.delta_total) > 0):
                raise DomainError("delta_total must be > 0 for n >= 2")
            if not self.hop.integrable:
                raise ComposabilityError("hop deficit profile is not integrable")

    @property
    def relaxed_hop(self) -> OverflowProfile:
        return self.hop.relaxed(np.asarray(self.delta_total) / (self.n - 1))

    @property
    def integrable(self) -> bool:
        return False

    def log_eps(self, b):
        if self.n == 1:
            return self.hop.log_eps(b)
        m = self.n - 1
        relaxed = self.relaxed_hop

        def log_relaxed_total(y):
            return math.log(m) + relaxed.log_eps(y / m)

        value, _ = _min_split(self.hop.log_eps, log_relaxed_total, np.asarray(b, dtype=float))
        return _out(value)

    def split(self, b):
        """Share of ``b`` assigned to the last, unrelaxed hop at the infimum."""
        if self.n == 1:
            return _out(np.ones(np.shape(b)))
        m = self.n - 1
        relaxed = self.relaxed_hop
        _, w = _min_split(self.hop.log_eps, lambda y: math.log(m) + relaxed.log_eps(y / m), np.asarray(b, float))
        return _out(w)

    def relaxed(self, delta):
        raise ComposabilityError("network profiles are not composed further")

    def log_inverse(self, log_target):
        log_target = np.asarray(log_target, dtype=float)
        hi = np.ones_like(log_target)
        for _ in range(400):
            bad = self.log_eps(hi) > log_target
            if not np.any(bad):
                break
            hi = np.where(bad, 2.0 * hi, hi)
        lo = np.zeros_like(hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            ok = self.log_eps(mid) <= log_target
            hi = np.where(ok, mid, hi)
            lo = np.where(ok, lo, mid)
        return _out(hi)


def compose_homogeneous(hop: RateServiceCurve, n: int, delta_total=None) -> RateServiceCurve:
    """Network service curve of ``n`` copies of ``hop``; ``n = 1`` returns ``hop`` unchanged."""
    if n == 1:
        return hop
    if delta_total is None or not 0 < delta_total < hop.rate:
        raise InfeasibleError(f"Delta must lie in (0, {hop.rate:g}), got {delta_total}")
    return RateServiceCurve(hop.rate - delta_total, NetworkProfile(hop.deficit, n, delta_total))


@dataclass(frozen=True)
class TandemScenario:
    """``n`` identical hops of capacity ``capacity`` with per-hop cross traffic.

    ``r_cross`` and ``delta_total`` are optimized when left as ``None``.
    ``approximate`` swaps the Gamma-envelope cross profile for the Weibull
    approximation (no ``beta``). ``beta_range`` overrides the cross ``beta``
    search interval.
    """

    n: int
    capacity: float
    cross: FbmTraffic | EbbOnOffAggregate
    through: CbrTraffic | EbbOnOffAggregate | FbmTraffic
    delta_total: float | None = None
    r_cross: float | None = None
    approximate: bool = False
    beta_range: tuple[float, float] | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if not self.capacity > 0:
            raise DomainError("capacity must be > 0")
        if self.approximate and not isinstance(self.cross, FbmTraffic):
            raise DomainError("the approximate profile exists for fBm cross traffic only")
        lam_th = self.through.mean_rate
        lam_cr = self.cross.mean_rate
        if not lam_th + lam_cr < self.capacity:
            raise InfeasibleError(
                f"mean load {lam_th + lam_cr:g} must be below capacity {self.capacity:g}"
            )
        if self.r_cross is not None:
            if not lam_cr < self.r_cross < self.capacity - lam_th:
                raise InfeasibleError(
                    f"r_cross={self.r_cross:g} must lie in ({lam_cr:g}, {self.capacity - lam_th:g})"
                )
        if self.delta_total is not None and self.n > 1:
            r_max = self.r_cross if self.r_cross is not None else lam_cr
            room = self.capacity - r_max - lam_th
            if not 0 < self.delta_total < room:
                raise InfeasibleError(
                    f"Delta={self.delta_total:g} violates r_th + r_cr + Delta <= C (room {room:g})"
                )

    def with_n(self, n: int) -> "TandemScenario":
        return replace(self, n=n)


@dataclass(frozen=True)
class E2EBound:
    n: int
    delay: float
    epsilon: float
    log_epsilon: float
    r_cross: float
    delta_total: float
    cross_param: float | None
    through_rate: float
    through_param: float | None
    service_rate: float
    params: dict = field(default_factory=dict)


# -- parameter families --------------------------------------------------


class _CrossFbm:
    def __init__(self, sc: TandemScenario):
        self.t = sc.cross
        self.approximate = sc.approximate
        if not self.approximate:
            self.t.require_rigorous()
        upper = (1.0 - self.t.hurst) / 2.0 if sc.n > 1 else 1.0 - self.t.hurst
        lo, hi = sc.beta_range if sc.beta_range is not None else (BETA_FLOOR, upper - BETA_FLOOR)
        if not 0 < lo < hi < upper:
            raise ComposabilityError(f"beta range must lie inside (0, {upper:g})")
        self.beta_lo, self.beta_hi = lo, hi
        self.ndim = 0 if self.approximate else 1
        self.param_name = None if self.approximate else "beta"

    def param(self, u, r):
        return None if self.approximate else _log_unit(u[0], self.beta_lo, self.beta_hi)

    def profile(self, r, p):
        if self.approximate:
            return FbmAsymptotic(np.exp(log_upsilon(self.t, r)), self.t.hurst)
        return FbmRigorous(np.exp(log_vartheta(self.t, r, p)), p, self.t.hurst)


def _ebb_profile(a, r, theta):
    # rounding can push theta onto the stability boundary; a huge prefactor there is never optimal
    slack = np.maximum(r - a.m * ebb_envelope_rate(a, theta), 1e-300)
    with np.errstate(over="ignore"):
        pref = np.minimum(1.0 / (theta * slack), 1e300)
    return EbbExponential(theta, pref)


class _CrossEbb:
    ndim = 1
    param_name = "theta"

    def __init__(self, sc: TandemScenario):
        self.a = sc.cross

    def param(self, u, r):
        return _logit_unit(u[0]) * ebb_critical_theta(self.a, r)

    def profile(self, r, theta):
        return _ebb_profile(self.a, r, theta)


class _ThroughCbr:
    ndim = 0
    param_name = None

    def __init__(self, sc):
        self.lam = sc.through.lam

    def rate(self, service_rate):
        return self.lam + 0.0 * np.asarray(service_rate)

    def param(self, u, service_rate):
        return None

    def profile(self, service_rate, p):
        return Zero()


class _ThroughEbb:
    ndim = 1
    param_name = "theta"

    def __init__(self, sc):
        self.a = sc.through

    def rate(self, service_rate):
        return service_rate

    def param(self, u, service_rate):
        return _logit_unit(u[0]) * ebb_critical_theta(self.a, service_rate)

    def profile(self, service_rate, theta):
        return _ebb_profile(self.a, service_rate, theta)


class _ThroughFbm:
    ndim = 1
    param_name = "beta"

    def __init__(self, sc):
        self.t = sc.through
        self.t.require_rigorous()

    def rate(self, service_rate):
        return service_rate

    def param(self, u, service_rate):
        return _log_unit(u[0], BETA_FLOOR, 1.0 - self.t.hurst - BETA_FLOOR)

    def profile(self, service_rate, beta):
        return FbmRigorous(np.exp(log_vartheta(self.t, service_rate, beta)), beta, self.t.hurst)


def _families(sc: TandemScenario):
    cross = _CrossFbm(sc) if isinstance(sc.cross, FbmTraffic) else _CrossEbb(sc)
    if isinstance(sc.through, CbrTraffic):
        through = _ThroughCbr(sc)
    elif isinstance(sc.through, EbbOnOffAggregate):
        through = _ThroughEbb(sc)
    else:
        through = _ThroughFbm(sc)
    return cross, through


class _Plan:
    """Maps unit-cube coordinates to scenario parameters."""

    def __init__(self, sc: TandemScenario, *, splits: int):
        self.sc = sc
        self.cross, self.through = _families(sc)
        self.opt_r = sc.r_cross is None
        self.opt_delta = sc.n > 1 and sc.delta_total is None
        self.has_th_split = self.through.ndim > 0
        self.has_net_split = sc.n > 1
        dims = ["r"] if self.opt_r else []
        dims += ["delta"] if self.opt_delta else []
        dims += ["cross"] * self.cross.ndim + ["through"] * self.through.ndim
        if splits:
            dims += ["th_split"] if self.has_th_split else []
            dims += ["net_split"] if self.has_net_split else []
        self.dims = dims

    def decode(self, u):
        sc = self.sc
        it = dict(zip(range(len(self.dims)), u))
        pos = {name: i for i, name in enumerate(self.dims)}
        C = sc.capacity
        lam_th = sc.through.mean_rate
        lam_cr = sc.cross.mean_rate
        if self.opt_r:
            span = C - lam_th - lam_cr
            r = lam_cr + span * (1e-9 + (1 - 2e-9) * np.asarray(it[pos["r"]]))
        else:
            r = np.asarray(sc.r_cross, dtype=float)
        if sc.n == 1:
            delta = 0.0 * r
        elif self.opt_delta:
            delta = _logit_unit(it[pos["delta"]]) * (C - r - lam_th)
        else:
            delta = np.asarray(sc.delta_total, dtype=float) + 0.0 * r
        service = C - r - delta
        cross_p = self.cross.param([it[pos["cross"]]] if "cross" in pos else [], r)
        through_p = self.through.param([it[pos["through"]]] if "through" in pos else [], service)
        out = {"r": r, "delta": delta, "service": service, "cross_p": cross_p, "through_p": through_p}
        out["th_split"] = _logit_unit(it[pos["th_split"]]) if "th_split" in pos else None
        out["net_split"] = _logit_unit(it[pos["net_split"]]) if "net_split" in pos else None
        return out

    def profiles(self, p):
        hop = self.cross.profile(p["r"], p["cross_p"])
        relaxed = hop.relaxed(p["delta"] / (self.sc.n - 1)) if self.sc.n > 1 else None
        th = self.through.profile(p["service"], p["through_p"])
        return hop, relaxed, th


def _log_forward(plan: _Plan, p, d):
    n = plan.sc.n
    hop, relaxed, th = plan.profiles(p)
    total = d * p["service"]
    if plan.has_th_split:
        b_th = p["th_split"] * total
        b_net = total - b_th
        log_th = th.log_eps(b_th)
    else:
        b_net = total
        log_th = -np.inf
    if n > 1:
        last = p["net_split"] * b_net
        log_net = np.logaddexp(hop.log_eps(last), math.log(n - 1) + relaxed.log_eps((b_net - last) / (n - 1)))
    else:
        log_net = hop.log_eps(b_net)
    return np.logaddexp(log_th, log_net)


def _forward_exact(plan: _Plan, p, d):
    """Bound at fixed envelope parameters with precise split searches."""
    n = plan.sc.n
    hop, _, th = plan.profiles(p)
    service = RateServiceCurve(float(p["service"]), hop)
    net = compose_homogeneous(RateServiceCurve(float(p["service"] + p["delta"]), hop), n, float(p["delta"])) if n > 1 else service
    env = AffineEnvelope(float(plan.through.rate(p["service"])), th)
    return float(log_single_hop_delay_violation(net, env, d))


def _scalar_params(plan, u):
    p = plan.decode([np.asarray(x, dtype=float) for x in u])
    return {k: (None if v is None else float(v)) for k, v in p.items()}


def _make_result(plan, p, d, log_eps):
    return E2EBound(
        n=plan.sc.n,
        delay=float(d),
        epsilon=float(np.exp(min(log_eps, 0.0))),
        log_epsilon=float(log_eps),
        r_cross=p["r"],
        delta_total=p["delta"],
        cross_param=p["cross_p"],
        through_rate=float(plan.through.rate(p["service"])),
        through_param=p["through_p"],
        service_rate=p["service"],
        params={k: p[k] for k in ("th_split", "net_split")},
    )


def e2e_delay_violation(sc: TandemScenario, d, *, tol: float = 1e-7) -> E2EBound:
    """Smallest bound on ``P[W > d]`` over all free parameters.

    ``P[W > (b_th + b_net) / (C - r - Delta)] <= eps_th(b_th) + eps_net(b_net)``.
    For ``n = 1`` this is the single-hop bound with ``Delta = 0``.
    """
    if not d > 0:
        raise DomainError("d must be > 0")
    plan = _Plan(sc, splits=True)
    u, _ = minimize_box(lambda u: _log_forward(plan, plan.decode(u), d), len(plan.dims), tol=tol)
    p = _scalar_params(plan, u)
    return _make_result(plan, p, d, _forward_exact(plan, p, d))


def _log_delay(plan: _Plan, p, log_target):
    n = plan.sc.n
    hop, relaxed, th = plan.profiles(p)
    if plan.has_th_split:
        q = p["th_split"]
        b_th = th.log_inverse(log_target + np.log(q))
        log_rest = log_target + np.log1p(-q)
    else:
        b_th = 0.0
        log_rest = log_target
    if n > 1:
        q = p["net_split"]
        b_last = hop.log_inverse(log_rest + np.log(q))
        b_rel = (n - 1) * relaxed.log_inverse(log_rest + np.log1p(-q) - math.log(n - 1))
        b_net = b_last + b_rel
    else:
        b_net = hop.log_inverse(log_rest)
    with np.errstate(divide="ignore"):
        return np.log(b_th + b_net) - np.log(p["service"])


def e2e_delay_bound(sc: TandemScenario, eps, *, tol: float = 1e-7) -> E2EBound:
    """Smallest delay ``d`` with ``P[W > d] <= eps``.

    The target is split between the through envelope, the last hop and the
    relaxed hops; each share is inverted in closed form (bisection for the
    relaxed Weibull profile).
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    plan = _Plan(sc, splits=True)
    if sc.approximate and sc.n > 1:
        return _bisect_delay(sc, eps, tol)
    log_target = math.log(eps)
    u, log_d = minimize_box(lambda u: _log_delay(plan, plan.decode(u), log_target), len(plan.dims), tol=tol)
    p = _scalar_params(plan, u)
    d = float(np.exp(log_d))
    if d <= 0:
        return _make_result(plan, p, 0.0, log_target)
    return _make_result(plan, p, d, _forward_exact(plan, p, d))


def _bisect_delay(sc, eps, tol):
    # the relaxed Weibull profile has no closed-form inverse; search d instead
    lo, hi = 0.0, 1.0
    while e2e_delay_violation(sc, hi, tol=tol).epsilon > eps:
        lo, hi = hi, 2.0 * hi
        if hi > 1e15:
            raise InfeasibleError("no finite delay meets the target")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if e2e_delay_violation(sc, mid, tol=tol).epsilon <= eps:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-7 * hi:
            break
    return e2e_delay_violation(sc, hi, tol=tol)


def fbm_network_service(sc: TandemScenario, beta, r=None, delta_total=None) -> RateServiceCurve:
    """``(C - r - Delta) t`` with the composed Gamma-envelope deficit."""
    if not isinstance(sc.cross, FbmTraffic):
        raise DomainError("scenario cross traffic is not fBm")
    r = sc.r_cross if r is None else r
    delta_total = sc.delta_total if delta_total is None else delta_total
    if r is None:
        raise DomainError("cross envelope rate is required")
    hop = fbm_leftover(sc.capacity, sc.cross, r, beta)
    if sc.n > 1 and beta >= (1.0 - sc.cross.hurst) / 2.0:
        raise ComposabilityError(f"beta={beta:g} must be < (1-H)/2 = {(1 - sc.cross.hurst) / 2:g} to compose")
    return compose_homogeneous(hop, sc.n, delta_total)


def ebb_network_service(sc: TandemScenario, theta, r=None, delta_total=None) -> RateServiceCurve:
    if not isinstance(sc.cross, EbbOnOffAggregate):
        raise DomainError("scenario cross traffic is not on-off")
    r = sc.r_cross if r is None else r
    delta_total = sc.delta_total if delta_total is None else delta_total
    if r is None:
        raise DomainError("cross envelope rate is required")
    return compose_homogeneous(ebb_leftover(sc.capacity, sc.cross, r, theta), sc.n, delta_total)


# -- scaling with n ------------------------------------------------------


def network_near_optimal_beta(n: int, eps_a: float, H: float) -> float:
    """``n**(2-2H) / (2 (-log eps_a))``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0 < eps_a < 1:
        raise DomainError("eps_a must lie in (0, 1)")
    if not 0 < H < 1:
        raise DomainError("H must lie in (0, 1)")
    return n ** (2.0 - 2.0 * H) / (2.0 * -math.log(eps_a))


def psi(H, beta):
    """``(1-H) / (1-H-2 beta)``."""
    beta = np.asarray(beta, dtype=float)
    if np.any(~((beta >= 0) & (beta < (1 - H) / 2))):
        raise DomainError("beta must lie in [0, (1-H)/2)")
    return _out((1.0 - H) / (1.0 - H - 2.0 * beta))


def log_network_stirling_profile(t: FbmTraffic, n: int, r, delta_total, beta, b):
    """Logarithm of :func:`network_stirling_profile`."""
    if n < 2:
        raise DomainError("the network profile needs n >= 2")
    beta = np.asarray(beta, dtype=float)
    h = t.hurst
    k = (1.0 - h - 2.0 * beta) / beta
    log_v = log_vartheta(t, r, beta)
    return _out(
        0.5 * np.log(math.pi * beta)
        + math.log(n * (n - 1))
        - k * np.log(np.asarray(b) / n)
        - (math.log(2.0 * math.e) + np.log(beta) + log_v) / (2.0 * beta)
        - np.log(delta_total * (1.0 - h - 2.0 * beta))
    )


def network_stirling_profile(t: FbmTraffic, n: int, r, delta_total, beta, b):
    """Stirling form of the simplified network deficit ``n * eps_delta(b/n)``.

    ``sqrt(pi beta) n (n-1) (b/n)**(-(1-H-2beta)/beta) / ((2 e beta vartheta)**(1/(2beta)) Delta (1-H-2beta))``.
    """
    with np.errstate(over="ignore"):
        return _out(np.exp(log_network_stirling_profile(t, n, r, delta_total, beta, b)))


def simplified_network_quantile(sc: TandemScenario, eps, *, tol: float = 1e-7):
    """Smallest ``b`` with ``n * eps_delta(b/n) <= eps``, over ``r``, ``Delta`` and the envelope parameter.

    Returns ``(b, params)``. This drops the unrelaxed last hop and serves only
    the growth-rate analysis in :func:`scaling_law_check`.
    """
    if sc.n < 2:
        raise DomainError("the simplified profile needs n >= 2")
    plan = _Plan(sc, splits=False)
    if plan.through.ndim:
        raise DomainError("the simplified profile assumes CBR through traffic")
    n = sc.n
    log_target = math.log(eps) - math.log(n)

    def log_b(u):
        p = plan.decode(u)
        _, relaxed, _ = plan.profiles(p)
        with np.errstate(divide="ignore"):
            return math.log(n) + np.log(relaxed.log_inverse(log_target))

    u, lb = minimize_box(log_b, len(plan.dims), tol=tol)
    return float(np.exp(lb)), _scalar_params(plan, u)


@dataclass(frozen=True)
class ScalingReport:
    n_values: tuple
    b_values: tuple
    exponent: float
    coefficient: float
    r_squared: float
    expected_exponent: float
    offset_exponent: float
    offset_shift: float
    witness_epsilon: tuple
    witness_nonincreasing: bool
    degenerate: bool
    message: str = ""


def _offset_fit(n, b, p0):
    """Fit ``b/n = c (a + log n)**p`` by scanning ``a >= 0`` (reported for diagnosis only)."""
    y = np.log(b / n)
    ln = np.log(n)
    best = (math.inf, p0, 0.0)
    for a in np.concatenate(([0.0], np.geomspace(1e-3, 1e3, 601))):
        x = np.log(a + ln)
        A = np.vstack([x, np.ones_like(x)]).T
        coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
        sse = float(np.sum((A @ coef - y) ** 2))
        if sse < best[0] - 1e-15:
            best = (sse, float(coef[0]), float(a))
    return best[1], best[2]


def scaling_law_check(sc: TandemScenario, eps_target: float, n_values, *, simplified: bool = True) -> ScalingReport:
    """Fit ``b(n) = c n (log n)**p`` at a fixed network violation probability.

    ``b(n)`` is the smallest buffer whose (simplified, or with
    ``simplified=False`` exact) network deficit meets ``eps_target``, every
    free parameter optimized per ``n``. The expected exponent is
    ``1/(2-2H)`` for fBm and 1 for on-off cross traffic. Also evaluates the
    Stirling network profile along ``b = n (c0 log n)**(1/(2-2H))``.
    """
    ns = np.array(sorted(int(v) for v in n_values), dtype=float)
    if len(ns) < 2 or ns.min() < 2:
        raise DomainError("need at least two n values, all >= 2")
    if isinstance(sc.cross, FbmTraffic):
        expected = 1.0 / (2.0 - 2.0 * sc.cross.hurst)
    else:
        expected = 1.0
    bs = []
    for n in ns:
        s = sc.with_n(int(n))
        if simplified:
            b, _ = simplified_network_quantile(s, eps_target)
        else:
            res = e2e_delay_bound(s, eps_target)
            b = res.delay * res.service_rate
        bs.append(b)
    bs = np.array(bs)
    x = np.log(np.log(ns))
    y = np.log(bs / ns)
    degenerate = not np.all(np.isfinite(y)) or np.ptp(x) == 0
    if degenerate:
        return ScalingReport(tuple(ns), tuple(bs), math.nan, math.nan, math.nan, expected, math.nan, math.nan,
                             (), False, True, "non-finite buffer values")
    p, logc = np.polyfit(x, y, 1)
    fitted = p * x + logc
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    p_off, a_off = _offset_fit(ns, bs, p)
    witness, nonincreasing = _witness(sc, ns)
    return ScalingReport(
        n_values=tuple(int(v) for v in ns),
        b_values=tuple(float(v) for v in bs),
        exponent=float(p),
        coefficient=float(np.exp(logc)),
        r_squared=r2,
        expected_exponent=expected,
        offset_exponent=p_off,
        offset_shift=a_off,
        witness_epsilon=witness,
        witness_nonincreasing=nonincreasing,
        degenerate=False,
    )


def _witness(sc: TandemScenario, ns):
    """Stirling network profile along ``b = n (c0 log n)**(1/(2-2H))`` with ``beta*`` per ``n``.

    ``c0`` is picked so that ``beta*`` at the smallest ``n`` is a quarter of
    ``(1-H)/2``, well inside the region where the Stirling form is accurate.
    """
    if not isinstance(sc.cross, FbmTraffic):
        return (), True
    t = sc.cross
    h = t.hurst
    C = sc.capacity
    lam_th = sc.through.mean_rate
    r = sc.r_cross if sc.r_cross is not None else 0.5 * (t.lam + C - lam_th)
    delta = sc.delta_total if sc.delta_total is not None else 0.5 * (C - r - lam_th)
    ups = float(np.exp(log_upsilon(t, r)))
    n0 = float(ns.min())
    # beta* = 1/(2 ups c0 log n) at b = n (c0 log n)^(1/(2-2H))
    c0 = 1.0 / (2.0 * ups * math.log(n0) * (1.0 - h) / 8.0)
    vals = []
    for n in ns:
        b = n * (c0 * math.log(n)) ** (1.0 / (2.0 - 2.0 * h))
        # network beta* = n^(2-2H) / (2 (-log eps_a)) with -log eps_a = ups b^(2-2H)
        beta = n ** (2.0 - 2.0 * h) / (2.0 * ups * b ** (2.0 - 2.0 * h))
        vals.append(float(network_stirling_profile(t, int(n), r, delta, beta, b)))
    tail = np.array(vals[1:])
    nonincreasing = bool(np.all(np.diff(tail) <= 1e-12 * np.abs(tail[:-1]))) if len(tail) > 1 else True
    return tuple(vals), nonincreasing
