"""Hot loops of the simulator, each in a numba and a numpy flavour.

The public names dispatch on ``fbmnc._jit.JIT_ENABLED``; both flavours are
importable as ``*_numba`` / ``*_numpy`` for testing and benchmarking. Without
numba the ``*_numba`` names are the plain-Python loops.
"""

from __future__ import annotations

import numpy as np

from .._jit import JIT_ENABLED, njit

__all__ = [
    "lindley",
    "envelope_crossings",
    "tandem_virtual_delay",
    "hosking_filter",
    "lindley_numba",
    "lindley_numpy",
    "envelope_crossings_numba",
    "envelope_crossings_numpy",
    "tandem_virtual_delay_numba",
    "tandem_virtual_delay_numpy",
    "hosking_filter_numba",
    "hosking_filter_numpy",
]


@njit(cache=True)
def lindley_numba(a, capacity):
    out = np.empty(a.shape[0])
    b = 0.0
    for i in range(a.shape[0]):
        b = b + a[i] - capacity
        if b < 0.0:
            b = 0.0
        out[i] = b
    return out


def lindley_numpy(a, capacity):
    # B(t) = S(t) - min_{s<=t} S(s) with S(0) = 0
    s = np.cumsum(np.asarray(a, dtype=float) - capacity)
    return s - np.minimum(np.minimum.accumulate(s), 0.0)


@njit(cache=True)
def envelope_crossings_numba(z, slack, pointwise, first):
    """Accumulate crossings of ``cumsum(z) > slack`` into the count arrays.

    ``pointwise[t]`` counts paths above the envelope at step ``t``;
    ``first[t]`` counts paths whose first crossing is at step ``t``.
    """
    n_paths, n = z.shape
    for p in range(n_paths):
        acc = 0.0
        crossed = False
        for t in range(n):
            acc += z[p, t]
            if acc > slack[t]:
                pointwise[t] += 1
                if not crossed:
                    first[t] += 1
                    crossed = True


def envelope_crossings_numpy(z, slack, pointwise, first):
    above = np.cumsum(z, axis=1) > slack
    pointwise += above.sum(axis=0)
    any_ = above.any(axis=1)
    idx = np.argmax(above, axis=1)[any_]
    first += np.bincount(idx, minlength=z.shape[1])


@njit(cache=True)
def tandem_virtual_delay_numba(cross, through, capacity, t0):
    """Virtual delay of the through bit arriving at slot ``t0``.

    ``cross`` has shape (hops, paths, slots) and ``through`` (paths, slots).
    Cross traffic is served first at each hop; the through flow gets the
    remaining capacity of the slot and its departures feed the next hop.
    Returns the delay per path, or ``slots - t0`` when the bit has not left
    by the last slot.
    """
    hops, n_paths, n = cross.shape
    out = np.empty(n_paths, dtype=np.int64)
    qc = np.zeros(hops)
    qt = np.zeros(hops)
    for p in range(n_paths):
        qc[:] = 0.0
        qt[:] = 0.0
        arrived = 0.0
        departed = 0.0
        target = 0.0
        out[p] = n - t0
        for t in range(n):
            flow = through[p, t]
            arrived += flow
            for h in range(hops):
                backlog = qc[h] + cross[h, p, t]
                served = backlog if backlog < capacity else capacity
                if served < 0.0:
                    served = 0.0
                qc[h] = backlog - served
                room = capacity - served
                load = qt[h] + flow
                sent = load if load < room else room
                if sent < 0.0:
                    sent = 0.0
                qt[h] = load - sent
                flow = sent
            departed += flow
            if t == t0:
                target = arrived * (1.0 - 1e-12)
            if t >= t0 and departed >= target:
                out[p] = t - t0
                break
    return out


def tandem_virtual_delay_numpy(cross, through, capacity, t0):
    hops, n_paths, n = cross.shape
    qc = np.zeros((hops, n_paths))
    qt = np.zeros((hops, n_paths))
    arrived = np.zeros(n_paths)
    departed = np.zeros(n_paths)
    target = np.zeros(n_paths)
    out = np.full(n_paths, n - t0, dtype=np.int64)
    done = np.zeros(n_paths, dtype=bool)
    for t in range(n):
        flow = through[:, t].copy()
        arrived += flow
        for h in range(hops):
            backlog = qc[h] + cross[h, :, t]
            served = np.clip(backlog, 0.0, capacity)
            qc[h] = backlog - served
            load = qt[h] + flow
            sent = np.clip(load, 0.0, capacity - served)
            qt[h] = load - sent
            flow = sent
        departed += flow
        if t == t0:
            target = arrived * (1.0 - 1e-12)
        if t >= t0:
            hit = ~done & (departed >= target)
            out[hit] = t - t0
            done |= hit
            if done.all():
                break
    return out


@njit(cache=True)
def hosking_filter_numba(phi, scale, z):
    """Sequential conditional sampling: ``x[t] = phi[t, :t] . x[t-1::-1] + scale[t] z[t]``."""
    n_paths, n = z.shape
    x = np.empty_like(z)
    for p in range(n_paths):
        for t in range(n):
            acc = 0.0
            for j in range(t):
                acc += phi[t, j] * x[p, t - 1 - j]
            x[p, t] = acc + scale[t] * z[p, t]
    return x


def hosking_filter_numpy(phi, scale, z):
    n = z.shape[1]
    x = np.empty_like(z)
    x[:, 0] = scale[0] * z[:, 0]
    for t in range(1, n):
        x[:, t] = x[:, t - 1 :: -1] @ phi[t, :t] + scale[t] * z[:, t]
    return x


if JIT_ENABLED:
    lindley = lindley_numba
    envelope_crossings = envelope_crossings_numba
    tandem_virtual_delay = tandem_virtual_delay_numba
    hosking_filter = hosking_filter_numba
else:
    lindley = lindley_numpy
    envelope_crossings = envelope_crossings_numpy
    tandem_virtual_delay = tandem_virtual_delay_numpy
    hosking_filter = hosking_filter_numpy
