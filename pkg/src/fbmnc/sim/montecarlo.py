"""Monte-Carlo estimators for envelope violations, backlogs and tandem delays."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import DomainError, ResourceGuardError
from ..numerics import gaussian_ccdf
from ..traffic import CbrTraffic, FbmTraffic
from .fgn import BLOCK, FgnSynthesizer
from .kernels import envelope_crossings, lindley, tandem_virtual_delay

__all__ = [
    "SamplePath",
    "ViolationEstimate",
    "DelaySample",
    "MAX_WORK",
    "clopper_pearson",
    "generate_fgn",
    "reich_backlog",
    "envelope_violation_mc",
    "pointwise_violation_mc",
    "samplepath_violation_mc",
    "tandem_delay_mc",
]

# trials * horizon above this raises ResourceGuardError
MAX_WORK = 5e10


@dataclass(frozen=True)
class SamplePath:
    """Zero-mean fGn ``increments``; arrivals per slot are ``lam + increments``."""

    increments: np.ndarray
    lam: float
    seed: int
    hurst: float
    sigma: float

    def __post_init__(self):
        if len(self.increments) < 1:
            raise DomainError("a sample path needs at least one slot")

    @property
    def arrivals(self) -> np.ndarray:
        return self.lam + self.increments

    def cumulative(self) -> np.ndarray:
        """``A(0), A(1), ..., A(N)`` with ``A(0) = 0``."""
        return np.concatenate([[0.0], np.cumsum(self.arrivals)])


def clopper_pearson(k, n, z: float = 3.0):
    """Exact binomial interval with two-sided coverage ``1 - 2 Phi_bar(z)``."""
    k = np.asarray(k, dtype=float)
    alpha = 2.0 * gaussian_ccdf(z)
    with np.errstate(invalid="ignore"):
        lo = np.where(k > 0, stats.beta.ppf(alpha / 2, k, n - k + 1), 0.0)
        hi = np.where(k < n, stats.beta.ppf(1 - alpha / 2, k + 1, n - k), 1.0)
    return lo, hi


@dataclass(frozen=True)
class ViolationEstimate:
    """Empirical violation frequencies with Clopper-Pearson bands (index ``i`` is ``t = i + 1``)."""

    t: np.ndarray
    trials: int
    counts: np.ndarray
    frequency: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


def _estimate(counts, trials, z):
    lo, hi = clopper_pearson(counts, trials, z)
    t = np.arange(1, len(counts) + 1)
    return ViolationEstimate(t, trials, counts, counts / trials, lo, hi)


def generate_fgn(t: FbmTraffic, length: int, seed: int, *, index: int = 0) -> SamplePath:
    """Path ``index`` of the stream ``seed``; exact fGn with the traffic's ``sigma`` and ``H``."""
    z = FgnSynthesizer(t.hurst, t.sigma, length).paths(seed, index, 1)[0]
    return SamplePath(z, t.lam, int(seed), t.hurst, t.sigma)


def reich_backlog(p: SamplePath, C: float) -> np.ndarray:
    """Backlog after each slot, ``B(t) = max(0, B(t-1) + a(t) - C)``."""
    if not C > 0:
        raise DomainError("C must be > 0")
    return lindley(np.ascontiguousarray(p.arrivals, dtype=float), float(C))


def _guard(trials, horizon):
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    if float(trials) * float(horizon) > MAX_WORK:
        raise ResourceGuardError(f"trials*horizon = {float(trials) * horizon:.3g} exceeds {MAX_WORK:.3g}")


def _blocks(trials):
    n_blocks = -(-trials // BLOCK)
    return [(b, min(BLOCK, trials - b * BLOCK)) for b in range(n_blocks)]


def envelope_violation_mc(t: FbmTraffic, slack, trials: int, seed: int, *, workers: int = 1, z: float = 3.0):
    """Crossings of ``Z(t) > slack[t-1]`` for ``t = 1..len(slack)``.

    Returns ``(pointwise, cumulative)`` estimates: the frequency of paths
    above the envelope at ``t``, and of paths that crossed at least once in
    ``[1, t]``.
    """
    slack = np.ascontiguousarray(slack, dtype=float)
    horizon = slack.size
    _guard(trials, horizon)
    synth = FgnSynthesizer(t.hurst, t.sigma, horizon)

    def run(job):
        b, count = job
        pw = np.zeros(horizon, dtype=np.int64)
        first = np.zeros(horizon, dtype=np.int64)
        envelope_crossings(synth.block(seed, b, count), slack, pw, first)
        return pw, first

    jobs = _blocks(trials)
    pointwise = np.zeros(horizon, dtype=np.int64)
    first = np.zeros(horizon, dtype=np.int64)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = map(run, jobs)
    for pw, fi in results:
        pointwise += pw
        first += fi
    return _estimate(pointwise, trials, z), _estimate(np.cumsum(first), trials, z)


def _slack(t: FbmTraffic, beta, eta, horizon):
    if not 0 < eta < 1:
        raise DomainError("eta must lie in (0, 1)")
    if not 0 <= beta < 1 - t.hurst:
        raise DomainError(f"beta must lie in [0, {1 - t.hurst:g})")
    tau = np.arange(1, int(horizon) + 1, dtype=float)
    return math.sqrt(-2.0 * math.log(eta)) * t.sigma * tau ** (t.hurst + beta)


def pointwise_violation_mc(t: FbmTraffic, beta, eta, horizon: int, trials: int, seed: int, **kw) -> ViolationEstimate:
    """Empirical ``P[A(t) > E(t)]`` for the sample-path envelope with parameters ``beta, eta``."""
    return envelope_violation_mc(t, _slack(t, beta, eta, horizon), trials, seed, **kw)[0]


def samplepath_violation_mc(t: FbmTraffic, beta, eta, horizon: int, trials: int, seed: int, **kw) -> ViolationEstimate:
    """Empirical probability that a path has crossed the envelope somewhere in ``[1, t]``."""
    return envelope_violation_mc(t, _slack(t, beta, eta, horizon), trials, seed, **kw)[1]


@dataclass(frozen=True)
class DelaySample:
    """Virtual delays (slots) of the through bit arriving at slot ``t0``.

    A delay equal to ``horizon - t0`` means the bit was still queued at the
    end of the run; such samples count as exceeding every shorter delay.
    """

    delays: np.ndarray
    t0: int
    horizon: int

    @property
    def censor(self) -> int:
        return self.horizon - self.t0

    def exceedance(self, d, z: float = 3.0):
        """``(freq, ci_low, ci_high)`` of ``P[W > d]`` for each ``d``."""
        d = np.atleast_1d(np.asarray(d, dtype=float))
        if np.any(d >= self.censor):
            raise DomainError(f"delays >= {self.censor} slots are censored")
        counts = (self.delays[None, :] > d[:, None]).sum(axis=1)
        lo, hi = clopper_pearson(counts, self.delays.size, z)
        return counts / self.delays.size, lo, hi

    def quantile(self, q):
        return np.quantile(self.delays, q)


def tandem_delay_mc(sc, trials: int, seed: int, *, horizon: int = 1024, t0: int | None = None, workers: int = 1):
    """Simulate the tandem of ``sc`` with independent fGn cross traffic per hop.

    Cross traffic has priority at every hop, the worst case for the through
    flow under any work-conserving scheduler. Only CBR through traffic is
    simulated; cross traffic must be fBm.
    """
    if not isinstance(sc.cross, FbmTraffic):
        raise DomainError("tandem simulation supports fBm cross traffic")
    if not isinstance(sc.through, CbrTraffic):
        raise DomainError("tandem simulation supports CBR through traffic")
    if t0 is None:
        t0 = (3 * horizon) // 4
    if not 0 <= t0 < horizon:
        raise DomainError("t0 must lie in [0, horizon)")
    _guard(trials * sc.n, horizon)
    cross = sc.cross
    synth = FgnSynthesizer(cross.hurst, cross.sigma, horizon)

    def run(job):
        b, count = job
        # hop h uses stream (seed, h) so hops are independent and fixed per path
        traffic = np.stack([cross.lam + synth.block(_hop_seed(seed, h), b, count) for h in range(sc.n)])
        through = np.full((count, horizon), sc.through.lam)
        return tandem_virtual_delay(traffic, through, float(sc.capacity), int(t0))

    jobs = _blocks(trials)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    return DelaySample(np.concatenate(parts), int(t0), int(horizon))


def _hop_seed(seed, hop):
    return int(np.random.SeedSequence([int(seed), 0x5EED, int(hop)]).generate_state(1, dtype=np.uint64)[0])
