"""Special functions and the 1-D searches shared by the analytical modules.

Gamma, the Gaussian tail and Lambert W come from scipy.special. The
optimizer is a coarse scan followed by golden-section refinement; the batched
variant runs many independent searches at once and is what the nested
parameter searches in :mod:`fbmnc.bounds` and :mod:`fbmnc.netcalc` use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError, OptimizationError

__all__ = [
    "Interval",
    "gamma_function",
    "log_gamma",
    "gamma_tail_integral",
    "log_gamma_tail_integral",
    "gaussian_ccdf",
    "log_gaussian_ccdf",
    "lambert_w0",
    "minimize_scalar",
    "minimize_batch",
    "minimize_box",
    "logsumexp2",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_MARGIN = 1e-9


@dataclass(frozen=True)
class Interval:
    """Open interval ``(lo, hi)`` evaluated on ``[lo + m*w, hi - m*w]``.

    ``w`` is the width and ``m`` the relative ``open_margin``.
    """

    lo: float
    hi: float
    open_margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        if not (self.lo < self.hi):
            raise DomainError(f"empty interval ({self.lo}, {self.hi})")
        if not (0.0 <= self.open_margin < 0.5):
            raise DomainError(f"open_margin must be in [0, 0.5), got {self.open_margin}")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def clamped(self) -> tuple[float, float]:
        pad = self.open_margin * self.width
        return self.lo + pad, self.hi - pad

    def clamp(self, x: float) -> float:
        a, b = self.clamped()
        return min(max(x, a), b)

    def __contains__(self, x) -> bool:
        return self.lo < x < self.hi


def gamma_function(y: float) -> float:
    if not y > 0:
        raise DomainError(f"gamma_function requires y > 0, got {y}")
    return float(special.gamma(y))


def log_gamma(y):
    """``log Gamma(y)`` for y > 0; accepts arrays."""
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise DomainError("log_gamma requires y > 0")
    out = special.gammaln(y)
    return float(out) if out.ndim == 0 else out


def log_gamma_tail_integral(x, xi):
    """Logarithm of ``int_0^inf x**(t**xi) dt`` for 0 < x < 1, xi > 0."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(~((x > 0) & (x < 1))):
        raise DomainError("gamma_tail_integral requires 0 < x < 1")
    if np.any(~(xi > 0)):
        raise DomainError("gamma_tail_integral requires xi > 0")
    out = special.gammaln(1.0 / xi) - np.log(xi) - np.log(-np.log(x)) / xi
    return float(out) if out.ndim == 0 else out


def gamma_tail_integral(x, xi):
    """``Gamma(1/xi) / (xi * (-log x)**(1/xi))``, the closed form of
    ``int_0^inf x**(t**xi) dt``."""
    out = np.exp(log_gamma_tail_integral(x, xi))
    return float(out) if np.ndim(out) == 0 else out


def gaussian_ccdf(x):
    """P[N(0,1) > x]."""
    out = special.ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def log_gaussian_ccdf(x):
    out = special.log_ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def lambert_w0(z: float) -> float:
    """Principal branch of Lambert W, polished with Halley steps."""
    branch = -1.0 / math.e
    if z < branch:
        if z > branch - 1e-15:
            return -1.0
        raise DomainError(f"lambert_w0 requires z >= -1/e, got {z}")
    if z == 0.0:
        return 0.0
    w = float(special.lambertw(z, 0).real)
    if not math.isfinite(w):
        # branch-point series in p = sqrt(2 (e z + 1))
        p = math.sqrt(max(2.0 * (math.e * z + 1.0), 0.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    if w <= -1.0:
        return -1.0
    for _ in range(3):
        ew = math.exp(w)
        f = w * ew - z
        if f == 0.0:
            break
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        step = f / denom
        w_new = w - step
        if not math.isfinite(w_new) or w_new <= -1.0:
            break
        w = w_new
        if abs(step) <= 1e-16 * max(1.0, abs(w)):
            break
    return w


def logsumexp2(a, b):
    """``log(exp(a) + exp(b))`` that tolerates ``-inf`` operands."""
    return np.logaddexp(a, b)


def _scan_grid(a, b, n_scan, log_scan):
    shape = (n_scan,) + (1,) * np.ndim(a)
    s = np.linspace(0.0, 1.0, n_scan).reshape(shape)
    if log_scan and np.all(a > 0):
        return a * (b / a) ** s
    return a + (b - a) * s


def _finite_or_inf(values):
    values = np.asarray(values, dtype=float)
    return np.where(np.isnan(values), np.inf, values)


def minimize_batch(f, lo, hi, *, n_scan=64, n_iter=40, log_scan=True, margin=DEFAULT_MARGIN):
    """Run independent scan + golden-section searches on a batch of intervals.

    ``lo`` and ``hi`` broadcast to a common batch shape ``S``. ``f`` is
    evaluated on arrays of shape ``(n_scan,) + S`` for the scan and ``S``
    during refinement, and must act elementwise. Returns ``(x, fx)``, both of
    shape ``S``; entries whose objective was never finite have ``fx = inf``.
    """
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    pad = margin * (hi - lo)
    a = lo + pad
    b = hi - pad

    grid = _scan_grid(a, b, n_scan, log_scan)
    vals = _finite_or_inf(np.broadcast_to(f(grid), grid.shape))
    idx = np.argmin(vals, axis=0)[None, ...]
    best_x = np.take_along_axis(grid, idx, axis=0)[0]
    best_f = np.take_along_axis(vals, idx, axis=0)[0]

    left = np.take_along_axis(grid, np.maximum(idx - 1, 0), axis=0)[0]
    right = np.take_along_axis(grid, np.minimum(idx + 1, n_scan - 1), axis=0)[0]

    c = right - _INV_PHI * (right - left)
    d = left + _INV_PHI * (right - left)
    fc = _finite_or_inf(np.broadcast_to(f(c), c.shape))
    fd = _finite_or_inf(np.broadcast_to(f(d), d.shape))
    for x_, f_ in ((c, fc), (d, fd)):
        better = f_ < best_f
        best_x = np.where(better, x_, best_x)
        best_f = np.where(better, f_, best_f)

    for _ in range(n_iter):
        go_left = fc < fd
        right = np.where(go_left, d, right)
        left = np.where(go_left, left, c)
        new = np.where(go_left, right - _INV_PHI * (right - left), left + _INV_PHI * (right - left))
        fnew = _finite_or_inf(np.broadcast_to(f(new), new.shape))
        better = fnew < best_f
        best_x = np.where(better, new, best_x)
        best_f = np.where(better, fnew, best_f)
        c, d, fc, fd = (
            np.where(go_left, new, d),
            np.where(go_left, c, new),
            np.where(go_left, fnew, fd),
            np.where(go_left, fc, fnew),
        )
    return best_x, best_f


def _golden_iterations(tol, n_scan):
    # bracket after the scan spans two grid cells, i.e. ~2/(n_scan-1) of the domain
    span = 2.0 / max(n_scan - 1, 1)
    if tol >= span:
        return 0
    return int(math.ceil(math.log(tol / span) / math.log(_INV_PHI)))


def minimize_scalar(f, domain: Interval, tol: float = 1e-10, *, n_scan: int = 256, vectorized: bool = False):
    """Minimize a scalar function on an open interval.

    A 256-point scan (log-spaced when the clamped domain is positive) locates
    the best cell; golden-section search refines inside its two neighbouring
    cells until the bracket shrinks below ``tol`` relative to the domain.
    ``f`` is never evaluated outside ``domain.clamped()``. Pass
    ``vectorized=True`` if ``f`` accepts numpy arrays.

    Returns ``(argmin, min)``.
    """
    if vectorized:
        func = f
    else:
        def func(x):
            flat = np.asarray(x, dtype=float)
            out = np.fromiter((f(float(v)) for v in flat.ravel()), dtype=float, count=flat.size)
            return out.reshape(flat.shape)

    x, fx = minimize_batch(
        func,
        domain.lo,
        domain.hi,
        n_scan=n_scan,
        n_iter=_golden_iterations(tol, n_scan),
        margin=domain.open_margin,
    )
    if not np.isfinite(fx):
        raise OptimizationError("objective is non-finite on the whole domain")
    return float(x), float(fx)


def _axis_grid(lo, hi, n, axis, ndim):
    shape = [1] * ndim
    shape[axis] = n
    return np.linspace(lo, hi, n).reshape(shape)


def minimize_box(f, ndim: int, *, grid: int | None = None, tol: float = 1e-9, max_rounds: int = 200, budget: int = 250_000):
    """Minimize ``f`` over the unit cube ``[0, 1]**ndim`` by a zooming tensor grid.

    Each round evaluates ``f`` once on a ``grid**ndim`` tensor grid (the
    coordinates are passed as ``ndim`` broadcastable arrays), then halves the
    box around the best point found so far. Stops when every side
    is below ``tol``. ``f`` must return an array broadcastable to the grid;
    NaN counts as ``+inf``. Returns ``(u, fu)`` with ``u`` of shape ``(ndim,)``.
    """
    if ndim == 0:
        value = float(np.asarray(f(()), dtype=float))
        if not np.isfinite(value):
            raise OptimizationError("objective is non-finite")
        return np.zeros(0), value
    if grid is None:
        grid = int(min(257, max(9, math.floor(budget ** (1.0 / ndim)))))
    lo = np.zeros(ndim)
    hi = np.ones(ndim)
    best_u = None
    best_f = math.inf
    for _ in range(max_rounds):
        coords = tuple(_axis_grid(lo[i], hi[i], grid, i, ndim) for i in range(ndim))
        shape = (grid,) * ndim
        vals = _finite_or_inf(np.broadcast_to(f(coords), shape))
        flat = int(np.argmin(vals))
        idx = np.unravel_index(flat, shape)
        if vals[idx] < best_f:
            best_f = float(vals[idx])
            best_u = np.array([coords[i].ravel()[idx[i]] for i in range(ndim)])
        if best_u is None:
            raise OptimizationError("objective is non-finite on the whole box")
        # halve the box per round: slower than zooming to the best cell but
        # keeps narrow curved valleys inside the box
        half = np.maximum((hi - lo) / 4.0, 2.0 * (hi - lo) / (grid - 1))
        lo = np.maximum(best_u - half, lo)
        hi = np.minimum(best_u + half, hi)
        if np.all(hi - lo < tol):
            break
    return best_u, best_f
