"""Command-line front end: ``fbmnc <command> --config scenario.ini``.

Every command writes CSV files (one header row, then data) and, unless
``[output] gnuplot = no``, a gnuplot script next to each file. Files are
written atomically. Exit status: 0 on success, 2 for configuration errors,
3 when the scenario is infeasible or unstable, 4 when a simulation exceeds
the work budget.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import bounds, envelope
from .config import Scenario, load_scenario
from .errors import (
    ComposabilityError,
    ConfigError,
    DomainError,
    InfeasibleError,
    InstabilityError,
    ResourceGuardError,
)
from .netcalc import TandemScenario, e2e_delay_bound, e2e_delay_violation
from .traffic import EbbOnOffAggregate, FbmTraffic, multiplexed_fbm

log = logging.getLogger("fbmnc")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 2, 3, 4


def _fmt(x):
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


class Output:
    """Collects the files written by one command."""

    def __init__(self, directory, prefix, gnuplot):
        self.directory = Path(directory)
        self.prefix = prefix
        self.gnuplot = gnuplot
        self.written = []

    def _atomic(self, name, text):
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.directory / name
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        self.written.append(path)
        return path

    def table(self, stem, header, rows, *, plot=None):
        """Write ``rows`` under ``header``; ``plot`` is ``(x_col, [y_cols], logscale_y)``."""
        name = f"{self.prefix}{stem}.csv"
        lines = []

        class _Sink:
            def write(self, s):
                lines.append(s)

        writer = csv.writer(_Sink(), lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        self._atomic(name, "".join(lines))
        if self.gnuplot and plot is not None:
            self._script(stem, name, header, *plot)

    def _script(self, stem, csv_name, header, x, ys, logy):
        col = {h: i + 1 for i, h in enumerate(header)}
        lines = [
            "set datafile separator ','",
            f"set xlabel '{header[col[x] - 1]}'",
            "set key outside",
        ]
        if logy:
            lines.append("set logscale y")
        plots = [f"'{csv_name}' skip 1 using {col[x]}:{col[y]} with lines title '{y}'" for y in ys]
        lines.append("plot " + ", \\\n     ".join(plots))
        self._atomic(f"{self.prefix}{stem}.gp", "\n".join(lines) + "\n")


def _grid(sc: Scenario, section, *, default_points=50):
    lo = sc.size(section, "b_min")
    hi = sc.size(section, "b_max")
    if lo is None or hi is None:
        raise ConfigError(f"[{section}] needs b_min and b_max", line=sc.lines.get((section, None)))
    points = sc.integer(section, "points", default_points)
    if not 0 < lo < hi or points < 2:
        raise ConfigError("need 0 < b_min < b_max and points >= 2", key="b_min", line=sc.where(section, "b_min"))
    return np.geomspace(lo, hi, points)


def _capacity(sc: Scenario):
    if sc.capacity is None:
        raise ConfigError("[server] capacity is required", key="capacity")
    return sc.capacity


def _single(sc: Scenario, base):
    names = sc.traffic_sections(base)
    if len(names) != 1:
        raise ConfigError(f"exactly one [{base}] section is required, found {len(names)}")
    return names[0]


# -- commands ------------------------------------------------------------


def cmd_envelope(sc: Scenario, args, out: Output):
    t = sc.traffic(_single(sc, "traffic"))
    if not isinstance(t, FbmTraffic):
        raise ConfigError("envelope needs fbm traffic", key="type")
    betas = sc.numbers("envelope", "betas", [0.0]) or [0.0]
    eta = sc.number("envelope", "eta", 1e-3)
    horizon = int(sc.duration("envelope", "horizon", 1000.0))
    tt = np.arange(1, horizon + 1, dtype=float)
    env = [envelope.fbm_sample_path_envelope(t, b, eta, tt) for b in betas]
    eps = [envelope.pointwise_epsilon(b, eta, tt) for b in betas]
    labels = [f"beta={b:g}" for b in betas]
    out.table(
        "envelope",
        ["t_slots", "t_ms"] + [f"E[bits] {lab}" for lab in labels],
        ([tt[i], sc.units.slots_to(tt[i], "ms")] + [e[i] for e in env] for i in range(horizon)),
        plot=("t_slots", [f"E[bits] {lab}" for lab in labels], False),
    )
    out.table(
        "envelope_eps",
        ["t_slots", "t_ms"] + [f"eps_p {lab}" for lab in labels],
        ([tt[i], sc.units.slots_to(tt[i], "ms")] + [e[i] for e in eps] for i in range(horizon)),
        plot=("t_slots", [f"eps_p {lab}" for lab in labels], True),
    )
    for b in betas:
        if b > 0:
            print(f"beta={b:g}: sample-path eps_s={envelope.sample_path_epsilon(b, eta, t.hurst):.6g}")


_SWEEPABLE = ("mean", "sigma", "hurst", "m", "capacity")


def cmd_backlog(sc: Scenario, args, out: Output):
    t = sc.traffic(_single(sc, "traffic"))
    if not isinstance(t, FbmTraffic):
        raise ConfigError("backlog needs fbm traffic", key="type")
    C = _capacity(sc)
    b = _grid(sc, "backlog")
    parameter = sc.raw("backlog", "parameter")
    header = ["b_bits", "b_Mb", "eps_rigorous", "eps_asymptotic", "beta_opt", "eta_opt", "tau_star_slots"]
    if parameter is None:
        cases = [(None, C, t)]
    else:
        parameter = parameter.strip().lower()
        if parameter not in _SWEEPABLE:
            raise ConfigError(f"parameter must be one of {_SWEEPABLE}", key="parameter",
                              line=sc.where("backlog", "parameter"))
        raw_values = sc.raw("backlog", "values")
        if raw_values is None:
            raise ConfigError("parameter sweeps need 'values'", key="values", line=sc.where("backlog", "parameter"))
        cases = []
        for text in (v.strip() for v in raw_values.split(",") if v.strip()):
            line = sc.where("backlog", "values")
            try:
                if parameter == "mean":
                    case = (text, C, FbmTraffic(sc.units.rate(text, key="values", line=line), t.sigma, t.hurst))
                elif parameter == "sigma":
                    case = (text, C, FbmTraffic(t.lam, sc.units.rate(text, key="values", line=line), t.hurst))
                elif parameter == "hurst":
                    case = (text, C, FbmTraffic(t.lam, t.sigma, float(text)))
                elif parameter == "m":
                    case = (text, C, multiplexed_fbm(t, int(text)))
                else:
                    case = (text, sc.units.rate(text, key="values", line=line), t)
            except ValueError as exc:
                raise ConfigError(str(exc), key="values", line=line) from None
            cases.append(case)
        header = [parameter] + header
    rows = []
    for label, cap, traffic in cases:
        res = bounds.backlog_sweep(cap, traffic, b)
        for i in range(b.size):
            row = [b[i], b[i] / 1e6, res["epsilon_rigorous"][i], res["epsilon_asymptotic"][i],
                   res["beta_opt"][i], res["eta_opt"][i], res["tau_star"][i]]
            rows.append(([label] if label is not None else []) + row)
    out.table("backlog", header, rows,
              plot=("b_bits", ["eps_rigorous", "eps_asymptotic"], True) if parameter is None else None)
    target = sc.number("backlog", "eps_target")
    if target is not None:
        for label, cap, traffic in cases:
            b_rig, beta = bounds.fbm_backlog_quantile(cap, traffic, target)
            b_asy = bounds.asymptotic_backlog_quantile(cap, traffic, target)
            tag = f"{parameter}={label}: " if label is not None else ""
            print(f"{tag}eps={target:g}: rigorous b={b_rig:.6g} bits (beta={beta:.4g}), "
                  f"asymptotic b={b_asy:.6g} bits, ratio={b_rig / b_asy:.4f}")


def cmd_tail_compare(sc: Scenario, args, out: Output):
    C = _capacity(sc)
    b = _grid(sc, "tail")
    hursts = sc.numbers("tail", "hurst_values", [])
    bursts = [sc.units.duration(x.strip(), key="burstiness_values", line=sc.where("tail", "burstiness_values"))
              for x in (sc.raw("tail", "burstiness_values") or "").split(",") if x.strip()]
    columns, header = [], ["b_bits", "b_Mb"]
    for name in sc.traffic_sections("traffic"):
        kind = sc.require(name, "type").strip().lower()
        if kind == "fbm":
            for h in hursts or [None]:
                t = sc.traffic(name, **({} if h is None else {"hurst": h}))
                columns.append(bounds.fbm_backlog_violation(C, t, b).log_epsilon / math.log(10))
                header.append(f"log10_eps {name} H={t.hurst:g}")
        elif kind == "ebb":
            for T in bursts or [None]:
                a = sc.traffic(name, **({} if T is None else {"burstiness": T}))
                columns.append(bounds.ebb_backlog_violation(C, a, b).log_epsilon / math.log(10))
                label = sc.units.slots_to(T, "ms") if T is not None else sc.raw(name, "burstiness")
                header.append(f"log10_eps {name} T={label}ms" if T is not None else f"log10_eps {name} T={label}")
        else:
            raise ConfigError("tail-compare supports fbm and ebb traffic", key="type", line=sc.where(name, "type"))
    if not columns:
        raise ConfigError("tail-compare needs at least one [traffic] section")
    out.table("tail", header, ([b[i], b[i] / 1e6] + [c[i] for c in columns] for i in range(b.size)),
              plot=("b_bits", header[2:], False))


def _cross_variants(sc: Scenario, section):
    names = sc.traffic_sections("cross")
    if not names:
        raise ConfigError("at least one [cross] section is required")
    hursts = sc.numbers(section, "hurst_values", [])
    bursts = [sc.units.duration(x.strip(), key="burstiness_values", line=sc.where(section, "burstiness_values"))
              for x in (sc.raw(section, "burstiness_values") or "").split(",") if x.strip()]
    for name in names:
        kind = sc.require(name, "type").strip().lower()
        if kind == "fbm":
            for h in hursts or [None]:
                t = sc.traffic(name, **({} if h is None else {"hurst": h}))
                yield name, "H", t.hurst, t
        elif kind == "ebb":
            for T in bursts or [None]:
                a = sc.traffic(name, **({} if T is None else {"burstiness": T}))
                yield name, "T_ms", sc.units.slots_to(_burstiness(a), "ms"), a
        else:
            raise ConfigError("cross traffic must be fbm or ebb", key="type", line=sc.where(name, "type"))


def _burstiness(a: EbbOnOffAggregate):
    return 1.0 / a.p12 + 1.0 / a.p21


def cmd_single_hop(sc: Scenario, args, out: Output):
    C = _capacity(sc)
    d = sc.duration("single_hop", "delay")
    if d is None:
        raise ConfigError("[single_hop] delay is required", key="delay")
    throughs = sc.traffic_sections("through")
    if not throughs:
        raise ConfigError("at least one [through] section is required")
    rows = []
    for name, pname, pval, cross in _cross_variants(sc, "single_hop"):
        row = [name, pname, pval]
        for th_name in throughs:
            through = sc.traffic(th_name)
            try:
                res = e2e_delay_violation(TandemScenario(1, C, cross, through), d)
                row.append(res.log_epsilon / math.log(10))
            except InfeasibleError as exc:
                log.warning("%s with %s: %s", name, th_name, exc)
                row.append("infeasible")
        rows.append(row)
    header = ["cross", "parameter", "value"] + [f"log10_eps {t}" for t in throughs]
    out.table("single_hop", header, rows)


def cmd_e2e(sc: Scenario, args, out: Output):
    C = _capacity(sc)
    ns = sc.integers("e2e", "n_values", [1, 2, 4, 8, 16])
    eps = sc.number("e2e", "epsilon", 1e-9)
    if not 0 < eps < 1:
        raise ConfigError("epsilon must lie in (0, 1)", key="epsilon", line=sc.where("e2e", "epsilon"))
    throughs = sc.traffic_sections("through")
    if not throughs:
        raise ConfigError("at least one [through] section is required")
    delta = sc.rate("e2e", "delta")
    r_cross = sc.rate("e2e", "r_cross")
    header = ["cross", "parameter", "value", "through", "n", "delay_slots", "delay_ms", "delay_per_hop_ms",
              "epsilon", "r_cross", "delta", "cross_param", "status"]
    rows = []
    for name, pname, pval, cross in _cross_variants(sc, "e2e"):
        for th_name in throughs:
            through = sc.traffic(th_name)
            for n in ns:
                base = [name, pname, pval, th_name, n]
                try:
                    scen = TandemScenario(n, C, cross, through, delta_total=delta if n > 1 else None,
                                          r_cross=r_cross)
                    res = e2e_delay_bound(scen, eps)
                except (InfeasibleError, InstabilityError, ComposabilityError) as exc:
                    log.warning("n=%d %s/%s: %s", n, name, th_name, exc)
                    rows.append(base + [""] * 7 + [f"infeasible: {exc}"])
                    continue
                ms = sc.units.slots_to(res.delay, "ms")
                rows.append(base + [res.delay, ms, ms / n, res.epsilon, res.r_cross, res.delta_total,
                                    res.cross_param, "ok"])
    out.table("e2e", header, rows)


def cmd_simulate(sc: Scenario, args, out: Output):
    from .sim import envelope_violation_mc

    t = sc.traffic(_single(sc, "traffic"))
    if not isinstance(t, FbmTraffic):
        raise ConfigError("simulate needs fbm traffic", key="type")
    beta = sc.number("simulate", "beta", 0.04)
    eta = sc.number("simulate", "eta", 1e-3)
    horizon = int(sc.duration("simulate", "horizon", 1000.0))
    trials = args.trials if args.trials is not None else sc.integer("simulate", "trials", 100_000)
    seed = args.seed if args.seed is not None else sc.integer("simulate", "seed", 1)
    workers = sc.integer("simulate", "workers", 1)
    if not 0 <= beta < 1 - t.hurst:
        raise ConfigError(f"beta must lie in [0, {1 - t.hurst:g})", key="beta", line=sc.where("simulate", "beta"))
    if not 0 < eta < 1:
        raise ConfigError("eta must lie in (0, 1)", key="eta", line=sc.where("simulate", "eta"))
    tt = np.arange(1, horizon + 1, dtype=float)
    slack = envelope.fbm_sample_path_envelope(t, beta, eta, tt) - t.lam * tt
    pw, cum = envelope_violation_mc(t, slack, trials, seed, workers=workers)
    bound = envelope.pointwise_epsilon(beta, eta, tt)
    exact = envelope.pointwise_violation_exact(t, beta, eta, tt)
    header = ["t_slots", "frequency", "ci_low", "ci_high", "bound", "exact"]
    out.table("sim_pointwise", header,
              ([tt[i], pw.frequency[i], pw.ci_low[i], pw.ci_high[i], bound[i], exact[i]] for i in range(horizon)),
              plot=("t_slots", ["frequency", "bound", "exact"], True))
    eps_s = envelope.sample_path_epsilon(beta, eta, t.hurst) if beta > 0 else 1.0
    out.table("sim_samplepath", header[:5],
              ([tt[i], cum.frequency[i], cum.ci_low[i], cum.ci_high[i], eps_s] for i in range(horizon)),
              plot=("t_slots", ["frequency", "bound"], True))
    print(f"trials={trials} seed={seed}: sample-path frequency at t={horizon} is {cum.frequency[-1]:.6g} "
          f"(bound {eps_s:.6g})")


COMMANDS = {
    "envelope": cmd_envelope,
    "backlog": cmd_backlog,
    "tail-compare": cmd_tail_compare,
    "single-hop": cmd_single_hop,
    "e2e": cmd_e2e,
    "simulate": cmd_simulate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="fbmnc", description="Backlog and delay bounds for fBm traffic.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario INI file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--format", choices=["csv"], default="csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        sc = load_scenario(args.config)
        if args.trials is not None and args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        out = Output(args.out, sc.raw("output", "prefix", ""), sc.flag("output", "gnuplot", True))
        COMMANDS[args.command](sc, args, out)
    except ConfigError as exc:
        print(f"fbmnc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, InstabilityError, ComposabilityError) as exc:
        print(f"fbmnc: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ResourceGuardError as exc:
        print(f"fbmnc: resource guard: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except DomainError as exc:
        print(f"fbmnc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in out.written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
