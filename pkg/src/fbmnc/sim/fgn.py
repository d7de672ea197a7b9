"""Exact fractional Gaussian noise.

Paths come from circulant embedding of the fGn autocovariance: one complex
FFT of size ``2N`` yields two independent paths (real and imaginary parts).
If an embedding eigenvalue is negative beyond round-off, generation falls
back to sequential conditional sampling (Durbin-Levinson), which is exact for
any valid covariance but costs ``O(N^2)`` per path.

Random numbers are drawn per block of ``BLOCK`` paths from the stream
``SeedSequence(seed, spawn_key=(block,))``; path ``i`` therefore depends only
on ``(seed, i)`` and never on how blocks are scheduled.
"""

from __future__ import annotations

import logging
from functools import lru_cache

import numpy as np

from ..errors import DomainError
from .kernels import hosking_filter

__all__ = ["BLOCK", "FgnSynthesizer", "block_rng", "circulant_eigenvalues"]

log = logging.getLogger(__name__)

BLOCK = 1024


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block),))))


def _unit_autocovariance(hurst, n):
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)


@lru_cache(maxsize=32)
def circulant_eigenvalues(hurst: float, n: int):
    """Eigenvalues of the size-``2n`` circulant embedding of unit-variance fGn."""
    v = _unit_autocovariance(hurst, n)
    row = np.concatenate([v, v[-2:0:-1]])
    lam = np.fft.fft(row).real
    lam.setflags(write=False)
    return lam


@lru_cache(maxsize=8)
def _durbin_levinson(hurst: float, n: int):
    v = _unit_autocovariance(hurst, n)
    phi = np.zeros((n, n))
    scale = np.empty(n)
    var = v[0]
    scale[0] = np.sqrt(var)
    prev = np.zeros(0)
    for t in range(1, n):
        k = (v[t] - prev @ v[t - 1 : 0 : -1]) / var if t > 1 else v[1] / var
        cur = np.empty(t)
        cur[: t - 1] = prev - k * prev[::-1]
        cur[t - 1] = k
        var = var * (1.0 - k * k)
        phi[t, :t] = cur
        scale[t] = np.sqrt(var)
        prev = cur
    phi.setflags(write=False)
    scale.setflags(write=False)
    return phi, scale


class FgnSynthesizer:
    """Draws blocks of fGn paths with variance ``sigma**2`` per slot."""

    def __init__(self, hurst: float, sigma: float, length: int, *, method: str = "auto"):
        if not 0 < hurst < 1:
            raise DomainError("H must lie in (0, 1)")
        if int(length) != length or length < 1:
            raise DomainError("length must be a positive integer")
        self.hurst = float(hurst)
        self.sigma = float(sigma)
        self.length = int(length)
        lam = circulant_eigenvalues(self.hurst, self.length)
        floor = -1e-10 * lam.max()
        if method not in ("auto", "circulant", "hosking"):
            raise DomainError(f"unknown method {method!r}")
        if method == "hosking" or (method == "auto" and lam.min() < floor):
            if method == "auto":
                log.warning("circulant embedding not nonnegative (min %.3g); using sequential sampling", lam.min())
            self.method = "hosking"
        else:
            self.method = "circulant"
            self._amp = np.sqrt(np.maximum(lam, 0.0) / lam.size)

    def block(self, seed: int, index: int, count: int = BLOCK) -> np.ndarray:
        """First ``count`` paths of block ``index``, shape ``(count, length)``."""
        if not 0 < count <= BLOCK:
            raise DomainError(f"count must lie in [1, {BLOCK}]")
        rng = block_rng(seed, index)
        n = self.length
        if self.method == "circulant":
            pairs = BLOCK // 2
            m = self._amp.size
            w = rng.standard_normal((pairs, m)) + 1j * rng.standard_normal((pairs, m))
            y = np.fft.fft(w * self._amp, axis=1)[:, :n]
            paths = np.empty((BLOCK, n))
            paths[0::2] = y.real
            paths[1::2] = y.imag
            out = paths[:count]
        else:
            phi, scale = _durbin_levinson(self.hurst, n)
            out = hosking_filter(phi, scale, rng.standard_normal((count, n)))
        return self.sigma * out

    def paths(self, seed: int, start: int, count: int) -> np.ndarray:
        """Paths ``start .. start+count-1`` of the stream ``seed``."""
        first, last = start // BLOCK, (start + count - 1) // BLOCK
        chunks = []
        for b in range(first, last + 1):
            lo = max(start - b * BLOCK, 0)
            hi = min(start + count - b * BLOCK, BLOCK)
            chunks.append(self.block(seed, b, hi)[lo:hi])
        return np.concatenate(chunks, axis=0)
