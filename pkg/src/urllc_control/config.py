"""Sectioned scenario files.

A scenario file is INI-style text::

    [errors]            ControlErrorProfile fields
    [blers]             DataBlerProfile fields
    [scenario]          ScenarioConfig fields, plus ``trials`` and ``seed``
    [timing]            TimingPlan fields; spans are written ``a..b``
    [sweep]             region sweep settings (see ``SweepConfig``)
    [profile NAME]      any [errors]/[blers] key, overriding the base values

Lists are comma separated. Unknown sections and keys are rejected.
``dump_scenario_file`` writes every field explicitly, so parsing its output
reproduces the parsed object exactly.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from .error_model import ControlErrorProfile, DataBlerProfile, ProfileError, validate_profiles
from .slot_grid import FORMAT_CATALOG, Direction, Mode, get_format
from .sim.types import ScenarioConfig, ScenarioError, TimingPlan, validate_scenario

__all__ = [
    "ConfigError",
    "ScenarioFile",
    "SweepConfig",
    "check_scenario",
    "dump_scenario_file",
    "load_scenario_file",
    "parse_scenario_text",
]


class ConfigError(ValueError):
    """Malformed or inconsistent scenario file; the message names the key."""


_ERROR_KEYS = tuple(f.name for f in fields(ControlErrorProfile))
_BLER_KEYS = tuple(f.name for f in fields(DataBlerProfile))
_TIMING_FIELDS = {f.name: f for f in fields(TimingPlan)}
_SCENARIO_KEYS = (
    "direction", "mode", "mu", "slot_format", "deadline_slots", "sr_period_slots",
    "p_mismatch", "robustness_multiplier", "freq_units", "forced_events",
    "early_nack_errors", "trials", "seed",
)
_SWEEP_KEYS = ("directions", "p1_values", "target", "x_grid", "x_min", "x_max",
               "x_points", "tying", "dl_formula")
_FORMULAS = ("coherent", "verbatim", "both")


@dataclass(frozen=True)
class SweepConfig:
    directions: tuple[str, ...] = ("uplink",)
    p1_values: tuple[float, ...] = (0.1,)
    target: float = 1.0 - 1e-5
    x_grid: tuple[float, ...] = ()
    tying: str = "tied"
    dl_formula: str = "coherent"

    @property
    def formulas(self) -> tuple[str, ...]:
        return ("coherent", "verbatim") if self.dl_formula == "both" else (self.dl_formula,)


@dataclass(frozen=True)
class ScenarioFile:
    errors: ControlErrorProfile = ControlErrorProfile()
    blers: DataBlerProfile = DataBlerProfile()
    scenario: ScenarioConfig = ScenarioConfig()
    trials: Optional[int] = None
    seed: Optional[int] = None
    sweep: Optional[SweepConfig] = None
    profile_overrides: tuple[tuple[str, tuple[tuple[str, float], ...]], ...] = ()

    def profiles(self) -> list[tuple[str, ControlErrorProfile, DataBlerProfile]]:
        """Named profile pairs; the base pair alone when no profile sections exist."""
        if not self.profile_overrides:
            return [("base", self.errors, self.blers)]
        out = []
        for name, overrides in self.profile_overrides:
            kv = dict(overrides)
            c = self.errors.replace(**{k: v for k, v in kv.items() if k in _ERROR_KEYS})
            d = self.blers.replace(**{k: v for k, v in kv.items() if k in _BLER_KEYS})
            out.append((name, c, d))
        return out


def _float(section: str, key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number: {raw!r}") from None
    if math.isnan(value):
        raise ConfigError(f"[{section}] {key}: NaN is not allowed")
    return value


def _int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not an integer: {raw!r}") from None


def _bool(section: str, key: str, raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("true", "yes", "on", "1"):
        return True
    if value in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"[{section}] {key}: not a boolean: {raw!r}")


def _list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def _span(section: str, key: str, raw: str) -> tuple[int, int]:
    parts = raw.replace("..", ",").split(",")
    if len(parts) != 2:
        raise ConfigError(f"[{section}] {key}: expected a span 'first..last', got {raw!r}")
    return _int(section, key, parts[0].strip()), _int(section, key, parts[1].strip())


def _enum(section: str, key: str, raw: str, enum_cls):
    try:
        return enum_cls(raw.strip().lower())
    except ValueError:
        choices = ", ".join(m.value for m in enum_cls)
        raise ConfigError(f"[{section}] {key}: expected one of {choices}, got {raw!r}") from None


def _check_keys(section: str, items: dict, allowed) -> None:
    for key in items:
        if key not in allowed:
            raise ConfigError(f"[{section}] unknown key {key!r}")


def _probabilities(section: str, items: dict, allowed) -> dict[str, float]:
    _check_keys(section, items, allowed)
    return {k: _float(section, k, v) for k, v in items.items()}


def _parse_timing(items: dict) -> tuple[tuple[str, object], ...]:
    _check_keys("timing", items, _TIMING_FIELDS)
    out = []
    for key, raw in items.items():
        if isinstance(_TIMING_FIELDS[key].default, tuple):
            out.append((key, _span("timing", key, raw)))
        else:
            out.append((key, _int("timing", key, raw)))
    return tuple(sorted(out))


def _parse_sweep(items: dict) -> SweepConfig:
    _check_keys("sweep", items, _SWEEP_KEYS)
    kw = {}
    if "directions" in items:
        dirs = tuple(_enum("sweep", "directions", v, Direction).value
                     for v in _list(items["directions"]))
        if not dirs:
            raise ConfigError("[sweep] directions: empty list")
        kw["directions"] = dirs
    if "p1_values" in items:
        p1s = tuple(_float("sweep", "p1_values", v) for v in _list(items["p1_values"]))
        if not p1s or any(not 0.0 <= p <= 1.0 for p in p1s):
            raise ConfigError("[sweep] p1_values: need one or more values in [0, 1]")
        kw["p1_values"] = p1s
    if "target" in items:
        target = _float("sweep", "target", items["target"])
        if not 0.0 < target <= 1.0:
            raise ConfigError("[sweep] target: must lie in (0, 1]")
        kw["target"] = target
    if "tying" in items:
        tying = items["tying"].strip().lower()
        if tying not in ("tied", "none"):
            raise ConfigError(f"[sweep] tying: expected tied or none, got {items['tying']!r}")
        kw["tying"] = tying
    if "dl_formula" in items:
        formula = items["dl_formula"].strip().lower()
        if formula not in _FORMULAS:
            raise ConfigError(f"[sweep] dl_formula: expected one of {', '.join(_FORMULAS)}, "
                              f"got {items['dl_formula']!r}")
        kw["dl_formula"] = formula

    ranged = [k for k in ("x_min", "x_max", "x_points") if k in items]
    if "x_grid" in items:
        if ranged:
            raise ConfigError(f"[sweep] {ranged[0]}: give either x_grid or x_min/x_max/x_points")
        grid = tuple(_float("sweep", "x_grid", v) for v in _list(items["x_grid"]))
    elif ranged:
        if len(ranged) != 3:
            missing = sorted({"x_min", "x_max", "x_points"} - set(ranged))
            raise ConfigError(f"[sweep] {missing[0]}: required with {ranged[0]}")
        lo = _float("sweep", "x_min", items["x_min"])
        hi = _float("sweep", "x_max", items["x_max"])
        n = _int("sweep", "x_points", items["x_points"])
        if not (0.0 < lo < hi < 1.0) or n < 2:
            raise ConfigError("[sweep] x_min: need 0 < x_min < x_max < 1 and x_points >= 2")
        a, b = math.log10(lo), math.log10(hi)
        grid = tuple(10.0 ** (a + (b - a) * i / (n - 1)) for i in range(n))
    else:
        raise ConfigError("[sweep] x_grid: required (or x_min/x_max/x_points)")
    if not grid or any(not 0.0 < x < 1.0 for x in grid):
        raise ConfigError("[sweep] x_grid: values must lie in (0, 1)")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("[sweep] x_grid: values must be sorted ascending")
    kw["x_grid"] = grid
    return SweepConfig(**kw)


def _build_scenario(items: dict, timing_overrides) -> tuple[ScenarioConfig, Optional[int], Optional[int]]:
    _check_keys("scenario", items, _SCENARIO_KEYS)
    kw: dict = {}
    trials = seed = None
    for key, raw in items.items():
        if key == "direction":
            kw[key] = _enum("scenario", key, raw, Direction)
        elif key == "mode":
            kw[key] = _enum("scenario", key, raw, Mode)
        elif key == "slot_format":
            try:
                kw[key] = get_format(raw.strip()).name
            except (KeyError, ValueError):
                raise ConfigError(f"[scenario] slot_format: unknown format {raw!r}; "
                                  f"catalog: {', '.join(FORMAT_CATALOG)}") from None
        elif key in ("mu", "deadline_slots", "sr_period_slots", "freq_units"):
            kw[key] = _int("scenario", key, raw)
        elif key in ("p_mismatch", "robustness_multiplier"):
            kw[key] = _float("scenario", key, raw)
        elif key == "forced_events":
            kw[key] = tuple(_list(raw))
        elif key == "early_nack_errors":
            kw[key] = _bool("scenario", key, raw)
        elif key == "trials":
            trials = _int("scenario", key, raw)
            if trials < 1:
                raise ConfigError("[scenario] trials: must be >= 1")
        elif key == "seed":
            seed = _int("scenario", key, raw)
    direction = kw.get("direction", Direction.UPLINK)
    if timing_overrides:
        kw["timing"] = TimingPlan.for_direction(direction, **dict(timing_overrides))
    try:
        return ScenarioConfig(**kw), trials, seed
    except ScenarioError as exc:
        raise ConfigError(f"[scenario] forced_events: {exc}") from None


def check_scenario(cfg: ScenarioConfig) -> ScenarioConfig:
    """Validate a scenario, reporting failures as ``ConfigError``."""
    if not 0.0 <= cfg.p_mismatch <= 1.0:
        raise ConfigError("[scenario] p_mismatch: must lie in [0, 1]")
    if cfg.robustness_multiplier < 1.0:
        raise ConfigError("[scenario] robustness_multiplier: must be >= 1")
    if cfg.freq_units < 1:
        raise ConfigError("[scenario] freq_units: must be >= 1")
    try:
        cfg.numerology
    except ValueError as exc:
        raise ConfigError(f"[scenario] mu: {exc}") from None
    try:
        validate_scenario(cfg)
    except ScenarioError as exc:
        raise ConfigError(f"[timing] {exc}") from None
    return cfg


def parse_scenario_text(text: str) -> ScenarioFile:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable scenario file: {exc}") from None

    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    profiles = []
    for name in sections:
        if name.startswith("profile "):
            label = name[len("profile "):].strip()
            if not label:
                raise ConfigError(f"[{name}] profile name missing")
            values = _probabilities(name, sections[name], _ERROR_KEYS + _BLER_KEYS)
            profiles.append((label, tuple(sorted(values.items()))))
        elif name not in ("errors", "blers", "scenario", "timing", "sweep"):
            raise ConfigError(f"[{name}] unknown section")

    errors = ControlErrorProfile(**_probabilities("errors", sections.get("errors", {}), _ERROR_KEYS))
    blers = DataBlerProfile(**_probabilities("blers", sections.get("blers", {}), _BLER_KEYS))
    timing = _parse_timing(sections.get("timing", {}))
    scenario, trials, seed = _build_scenario(sections.get("scenario", {}), timing)
    sweep = _parse_sweep(sections["sweep"]) if "sweep" in sections else None
    sf = ScenarioFile(errors, blers, scenario, trials, seed, sweep, tuple(profiles))

    for label, c, d in sf.profiles():
        try:
            validate_profiles(c, d)
        except ProfileError as exc:
            where = "[errors]/[blers]" if label == "base" else f"[profile {label}]"
            raise ConfigError(f"{where} {exc}") from None
    check_scenario(scenario)
    return sf


def load_scenario_file(path: str | Path) -> ScenarioFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {str(path)!r}: {exc.strerror}") from None
    return parse_scenario_text(text)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple) and len(value) == 2 and all(isinstance(v, int) for v in value):
        return f"{value[0]}..{value[1]}"
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def dump_scenario_file(sf: ScenarioFile) -> str:
    """Canonical text form: every field written, floats in round-trip repr."""
    lines = ["[errors]"]
    lines += [f"{k} = {_fmt(v)}" for k, v in sf.errors.as_dict().items()]
    lines += ["", "[blers]"]
    lines += [f"{k} = {_fmt(v)}" for k, v in sf.blers.as_dict().items()]
    cfg = sf.scenario
    lines += ["", "[scenario]"]
    for key in _SCENARIO_KEYS:
        if key == "trials":
            value = sf.trials
        elif key == "seed":
            value = sf.seed
        else:
            value = getattr(cfg, key)
        if value is None or (key == "forced_events" and not value):
            continue
        lines.append(f"{key} = {_fmt(value)}")
    lines += ["", "[timing]"]
    lines += [f"{k} = {_fmt(v)}" for k, v in cfg.timing.as_dict().items()]
    if sf.sweep is not None:
        s = sf.sweep
        lines += ["", "[sweep]",
                  f"directions = {_fmt(s.directions)}",
                  f"p1_values = {_fmt(s.p1_values)}",
                  f"target = {_fmt(s.target)}",
                  f"x_grid = {_fmt(s.x_grid)}",
                  f"tying = {s.tying}",
                  f"dl_formula = {s.dl_formula}"]
    for label, overrides in sf.profile_overrides:
        lines += ["", f"[profile {label}]"]
        lines += [f"{k} = {_fmt(v)}" for k, v in overrides]
    return "\n".join(lines) + "\n"
