"""Scenario files and physical units.

A scenario is an INI document read with :mod:`configparser`. Rates carry a
unit suffix (``Gb/s``, ``Mb/s``, ``kb/s``, ``b/s`` or ``bits/slot``); sizes
use ``bits``, ``kb``, ``Mb`` or ``Gb``; durations use ``s``, ``ms``, ``us``
or ``slots``. Everything is converted to bits and slots, using the slot
length from ``[server] slot`` (default ``10 us``). Conversions go through
:class:`fractions.Fraction`, so ``Gb/s -> bits/slot -> Gb/s`` is exact for
decimal inputs.

Unknown sections or keys are errors that name the offending line.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import ConfigError, FbmncError
from .traffic import CbrTraffic, FbmTraffic, ebb_from_mean_and_burstiness

__all__ = ["Units", "Scenario", "load_scenario", "parse_scenario", "RATE_UNITS", "SIZE_UNITS", "TIME_UNITS"]

RATE_UNITS = {"gb/s": Fraction(10**9), "mb/s": Fraction(10**6), "kb/s": Fraction(10**3), "b/s": Fraction(1)}
SIZE_UNITS = {"bits": Fraction(1), "b": Fraction(1), "kb": Fraction(10**3), "mb": Fraction(10**6), "gb": Fraction(10**9)}
TIME_UNITS = {"s": Fraction(1), "ms": Fraction(1, 10**3), "us": Fraction(1, 10**6)}

_TRAFFIC_KEYS = {"type", "mean", "sigma", "hurst", "m", "peak", "burstiness"}
_SCHEMA = {
    "server": {"capacity", "slot"},
    "traffic": _TRAFFIC_KEYS,
    "cross": _TRAFFIC_KEYS,
    "through": _TRAFFIC_KEYS,
    "envelope": {"betas", "eta", "horizon"},
    "backlog": {"b_min", "b_max", "points", "eps_target", "parameter", "values"},
    "tail": {"hurst_values", "burstiness_values", "b_min", "b_max", "points"},
    "single_hop": {"delay", "hurst_values"},
    "e2e": {"n_values", "epsilon", "hurst_values", "burstiness_values", "delta", "r_cross"},
    "simulate": {"beta", "eta", "horizon", "trials", "seed", "workers"},
    "output": {"prefix", "gnuplot"},
}
_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QUANTITY = re.compile(rf"^\s*({_NUMBER})\s*([A-Za-z/]*)\s*$")


def _base(section: str) -> str:
    return section.split(".", 1)[0]


@dataclass(frozen=True)
class Units:
    """Slot length in seconds, kept exact."""

    slot: Fraction = Fraction(1, 100_000)

    def rate(self, text: str, *, key=None, line=None) -> float:
        value, unit = _split(text, key, line)
        unit = unit.lower()
        if unit == "bits/slot":
            return float(value)
        if unit not in RATE_UNITS:
            raise ConfigError(f"rate needs a unit suffix from {sorted(RATE_UNITS)} or bits/slot, got {text!r}",
                              key=key, line=line)
        return float(value * RATE_UNITS[unit] * self.slot)

    def size(self, text: str, *, key=None, line=None) -> float:
        value, unit = _split(text, key, line)
        unit = unit.lower()
        if unit not in SIZE_UNITS:
            raise ConfigError(f"size needs a unit suffix from {sorted(SIZE_UNITS)}, got {text!r}", key=key, line=line)
        return float(value * SIZE_UNITS[unit])

    def duration(self, text: str, *, key=None, line=None) -> float:
        """Duration in slots."""
        value, unit = _split(text, key, line)
        unit = unit.lower()
        if unit == "slots":
            return float(value)
        if unit not in TIME_UNITS:
            raise ConfigError(f"duration needs a unit suffix from {sorted(TIME_UNITS)} or slots, got {text!r}",
                              key=key, line=line)
        return float(value * TIME_UNITS[unit] / self.slot)

    def rate_to(self, bits_per_slot: float, unit: str) -> float:
        return float(Fraction(bits_per_slot) / self.slot / RATE_UNITS[unit.lower()])

    def slots_to(self, slots: float, unit: str) -> float:
        return float(Fraction(slots) * self.slot / TIME_UNITS[unit.lower()])


def _split(text, key, line):
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"expected '<number> <unit>', got {text!r}", key=key, line=line)
    return Fraction(m.group(1)), m.group(2)


@dataclass
class Scenario:
    """A parsed scenario with values converted to bits and slots."""

    units: Units
    capacity: float | None
    sections: dict
    lines: dict = field(default_factory=dict)
    source: str = "<string>"

    def has(self, section: str) -> bool:
        return section in self.sections

    def where(self, section, key):
        return self.lines.get((section, key))

    def raw(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section, key):
        value = self.raw(section, key)
        if value is None:
            raise ConfigError(f"missing required key in [{section}]", key=key, line=self.lines.get((section, None)))
        return value

    def _convert(self, section, key, func, default):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            return func(text)
        except ConfigError:
            raise
        except (ValueError, FbmncError) as exc:
            raise ConfigError(str(exc), key=key, line=self.where(section, key)) from None

    def number(self, section, key, default=None):
        return self._convert(section, key, float, default)

    def integer(self, section, key, default=None):
        return self._convert(section, key, int, default)

    def flag(self, section, key, default=False):
        def parse(text):
            low = text.strip().lower()
            if low in ("1", "yes", "true", "on"):
                return True
            if low in ("0", "no", "false", "off"):
                return False
            raise ValueError(f"expected yes/no, got {text!r}")

        return self._convert(section, key, parse, default)

    def numbers(self, section, key, default=None):
        return self._convert(section, key, lambda s: [float(x) for x in s.split(",") if x.strip()], default)

    def integers(self, section, key, default=None):
        return self._convert(section, key, lambda s: [int(x) for x in s.split(",") if x.strip()], default)

    def rate(self, section, key, default=None):
        return self._convert(section, key, lambda s: self.units.rate(s, key=key, line=self.where(section, key)), default)

    def size(self, section, key, default=None):
        return self._convert(section, key, lambda s: self.units.size(s, key=key, line=self.where(section, key)), default)

    def duration(self, section, key, default=None):
        return self._convert(section, key, lambda s: self.units.duration(s, key=key, line=self.where(section, key)),
                             default)

    def traffic_sections(self, base: str):
        return [s for s in self.sections if _base(s) == base]

    def traffic(self, section: str, **override):
        """Build the traffic model of ``section``; ``override`` replaces ``hurst`` or ``burstiness``."""
        kind = self.require(section, "type").strip().lower()
        allowed = {"fbm": {"mean", "sigma", "hurst"}, "ebb": {"mean", "m", "peak", "burstiness"}, "cbr": {"mean"}}
        if kind not in allowed:
            raise ConfigError(f"type must be one of {sorted(allowed)}, got {kind!r}", key="type",
                              line=self.where(section, "type"))
        for key in self.sections[section]:
            if key != "type" and key not in allowed[kind]:
                raise ConfigError(f"key not valid for {kind} traffic", key=key, line=self.where(section, key))
        try:
            if kind == "cbr":
                self.require(section, "mean")
                return CbrTraffic(self.rate(section, "mean"))
            if kind == "fbm":
                self.require(section, "mean"), self.require(section, "sigma")
                hurst = override.get("hurst", self.number(section, "hurst"))
                if hurst is None:
                    self.require(section, "hurst")
                return FbmTraffic(self.rate(section, "mean"), self.rate(section, "sigma"), hurst)
            self.require(section, "mean"), self.require(section, "peak")
            m = self.integer(section, "m", 1)
            burst = override.get("burstiness", self.duration(section, "burstiness"))
            if burst is None:
                self.require(section, "burstiness")
            return ebb_from_mean_and_burstiness(m, self.rate(section, "mean"), self.rate(section, "peak"), burst)
        except ConfigError:
            raise
        except FbmncError as exc:
            raise ConfigError(f"[{section}] {exc}", line=self.lines.get((section, None))) from None


def _line_index(text: str):
    lines = {}
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            lines[(section, None)] = number
            continue
        m = re.match(r"([^=:]+?)\s*[=:]", stripped)
        if m and section is not None:
            lines[(section, m.group(1).strip().lower())] = number
    return lines


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), strict=True)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(exc.message if hasattr(exc, "message") else str(exc), line=line) from None
    lines = _line_index(text)
    sections = {}
    for name in parser.sections():
        base = _base(name)
        if base not in _SCHEMA or ("." in name and base not in ("traffic", "cross", "through")):
            raise ConfigError(f"unknown section [{name}]", line=lines.get((name, None)))
        for key in parser[name]:
            if key not in _SCHEMA[base]:
                raise ConfigError(f"unknown key in [{name}]", key=key, line=lines.get((name, key)))
        sections[name] = dict(parser[name])
    slot_text = sections.get("server", {}).get("slot", "10 us")
    value, unit = _split(slot_text, "slot", lines.get(("server", "slot")))
    if unit.lower() not in TIME_UNITS or value <= 0:
        raise ConfigError("slot must be a positive duration in s, ms or us", key="slot", line=lines.get(("server", "slot")))
    units = Units(value * TIME_UNITS[unit.lower()])
    sc = Scenario(units, None, sections, lines, source)
    sc.capacity = sc.rate("server", "capacity")
    return sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))
