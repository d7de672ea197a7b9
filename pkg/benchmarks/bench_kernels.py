"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--paths 1024] [--horizon 1000] [--repeat 5]

Each kernel runs once untimed (JIT compilation), then the best of
``--repeat`` runs is reported. Outputs of the two flavours are compared
before timing.
"""

import argparse
import timeit

import numpy as np

from fbmnc._jit import HAS_NUMBA
from fbmnc.sim import kernels
from fbmnc.sim.fgn import FgnSynthesizer, _durbin_levinson


def cases(paths, horizon, rng):
    z = FgnSynthesizer(0.7, 0.5, horizon).block(seed=1, index=0, count=min(paths, 1024))
    slack = 3.7 * 0.5 * np.arange(1, horizon + 1) ** 0.74
    a = 0.5 + z[0]
    cross = 0.4 + 0.2 * rng.standard_normal((3, paths, horizon))
    through = np.full((paths, horizon), 0.2)
    phi, scale = _durbin_levinson(0.7, min(horizon, 256))
    noise = rng.standard_normal((min(paths, 64), phi.shape[0]))

    def crossings(flavour):
        pw = np.zeros(horizon, dtype=np.int64)
        first = np.zeros(horizon, dtype=np.int64)
        getattr(kernels, f"envelope_crossings_{flavour}")(z, slack, pw, first)
        return np.concatenate([pw, first])

    return {
        "lindley": lambda f: getattr(kernels, f"lindley_{f}")(a, 0.6),
        "envelope_crossings": crossings,
        "tandem_virtual_delay": lambda f: getattr(kernels, f"tandem_virtual_delay_{f}")(
            cross, through, 1.0, (3 * horizon) // 4),
        "hosking_filter": lambda f: getattr(kernels, f"hosking_filter_{f}")(phi, scale, noise),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=1024)
    parser.add_argument("--horizon", type=int, default=1000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not HAS_NUMBA:
        print("numba unavailable (or FBMNC_DISABLE_JIT set): both columns time the same numpy path")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, run in cases(args.paths, args.horizon, rng).items():
        fast, ref = run("numba"), run("numpy")
        if not np.allclose(fast, ref, rtol=1e-9, atol=1e-9):
            raise SystemExit(f"{name}: flavours disagree")
        t_numba = min(timeit.repeat(lambda: run("numba"), number=1, repeat=args.repeat))
        t_numpy = min(timeit.repeat(lambda: run("numpy"), number=1, repeat=args.repeat))
        print(f"{name:<22}{1e3 * t_numba:>12.2f}{1e3 * t_numpy:>12.2f}{t_numpy / t_numba:>10.1f}x")


if __name__ == "__main__":
    main()
