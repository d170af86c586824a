"""Flat ``section.key = value`` configuration documents.

Every document starts from the preset of its scenario kind; keys in the
document, then ``--set`` overrides, replace individual defaults.  Values are
plain numbers, words, or (for control channels) an event list such as
``off@1.1e11 on@2.5e11:5e8`` where the optional ``:tau`` sets that event's
ramp time and otherwise ``ramp_tau`` of the channel applies.
"""

from __future__ import annotations

import math
import re

from .errors import ConfigError
from .field import SCHEMES, Grid
from .model import DecayRates, LevelScheme, MediumSpec
from .pulses import ControlSchedule, ProbeSpec, PulseSchedule, SwitchEvent
from .scenario import RAMP_TAU, SCENARIO_KINDS, ScenarioConfig, preset, steps_for

AUTO = "auto"

# key -> (kind, predicate, human-readable valid range)
_POS = (lambda v: v > 0, "> 0")
_NONNEG = (lambda v: v >= 0, ">= 0")
_ANY = (lambda v: True, "any finite number")

SCHEMA = {
    "medium.E_a": ("float", *_ANY),
    "medium.E_b": ("float", *_ANY),
    "medium.E_c": ("float", *_ANY),
    "medium.E_d": ("float", *_ANY),
    "medium.gamma_ab": ("float", *_NONNEG),
    "medium.gamma_ac": ("float", *_NONNEG),
    "medium.gamma_db": ("float", *_NONNEG),
    "medium.gamma_dc": ("float", *_NONNEG),
    "medium.N": ("float", *_POS),
    "medium.L": ("float", *_POS),
    "medium.d1": ("float|auto", *_POS),
    "medium.d2": ("float|auto", *_POS),
    "medium.d3": ("float|auto", *_POS),
    "medium.d4": ("float|auto", *_POS),
    "grid.nz": ("int", lambda v: v >= 2, ">= 2"),
    "grid.dt": ("float", *_POS),
    "grid.nt": ("int|auto", lambda v: v >= 1, ">= 1 or 'auto'"),
    "grid.scheme": ("word", lambda v: v in SCHEMES, f"one of {', '.join(SCHEMES)}"),
    "probe.eps10": ("float", *_NONNEG),
    "probe.t1": ("float", *_ANY),
    "probe.t2": ("float", *_ANY),
    "probe3.eps10": ("float", *_NONNEG),
    "probe3.t1": ("float", *_ANY),
    "probe3.t2": ("float", *_ANY),
    "control2.level": ("float", *_NONNEG),
    "control2.ramp_tau": ("float", *_POS),
    "control2.events": ("events", *_ANY),
    "control4.level": ("float", *_NONNEG),
    "control4.ramp_tau": ("float", *_POS),
    "control4.events": ("events", *_ANY),
    "run.scenario": ("word", lambda v: v in SCENARIO_KINDS, f"one of {', '.join(SCENARIO_KINDS)}"),
    "run.record_every": ("int", lambda v: v >= 1, ">= 1"),
    "run.peak_threshold": ("float", lambda v: 0 < v < 1, "in (0, 1)"),
    "run.tail": ("float", *_POS),
}

_LINE = re.compile(r"^\s*([A-Za-z0-9_]+)\.([A-Za-z0-9_]+)\s*=\s*(.*?)\s*$")
_EVENT = re.compile(r"^(on|off)@([^:]+)(?::(.+))?$")


def _range_error(key, raw, desc):
    return ConfigError(f"{key} = {raw!r} is out of range: must be {desc}")


def _parse_float(key, raw):
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"{key} = {raw!r} is not a number") from None
    if not math.isfinite(v):
        raise ConfigError(f"{key} = {raw!r} must be finite")
    return v


def _parse_events(key, raw):
    tokens = [t for t in re.split(r"[\s,]+", raw) if t]
    if tokens in ([], ["none"]):
        return []
    events = []
    for tok in tokens:
        m = _EVENT.match(tok)
        if not m:
            raise ConfigError(f"{key}: cannot parse event {tok!r}; expected on@T or off@T[:TAU]")
        tau = None if m.group(3) is None else _parse_float(key, m.group(3))
        if tau is not None and not tau > 0:
            raise _range_error(key, tok, "ramp time > 0")
        events.append((m.group(1), _parse_float(key, m.group(2)), tau))
    return events


def _convert(key, raw):
    kind, ok, desc = SCHEMA[key]
    if kind == "events":
        return _parse_events(key, raw)
    if kind.endswith("|auto") and raw == AUTO:
        return None
    if kind.startswith("int"):
        try:
            v = int(raw)
        except ValueError:
            raise ConfigError(f"{key} = {raw!r} is not an integer") from None
    elif kind.startswith("float"):
        v = _parse_float(key, raw)
    else:
        v = raw
    if not ok(v):
        raise _range_error(key, raw, desc)
    return v


def parse_document(text):
    """Raw ``{key: value string}`` pairs of a document, with key checking."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        if not line.strip():
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {line.strip()!r}")
        key = f"{m.group(1)}.{m.group(2)}"
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r} (line {lineno})")
        out[key] = m.group(3)
    return out


def parse_override(item):
    """``section.key=value`` from the command line."""
    key, sep, value = item.partition("=")
    key = key.strip()
    if not sep:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    if key not in SCHEMA:
        raise ConfigError(f"unknown key {key!r}")
    return key, value.strip()


def _fmt(v):
    return repr(float(v))


def _events_text(channel: ControlSchedule):
    if not channel.events:
        return "none"
    return " ".join(f"{e.direction}@{_fmt(e.t_switch)}:{_fmt(e.ramp_tau)}" for e in channel.events)


def config_values(config: ScenarioConfig, resolved=True):
    """Flat key/value strings describing ``config``.

    With ``resolved=False`` the derived entries (dipoles, nt) read ``auto``
    so that changing the inputs they derive from takes effect.
    """
    m, g, s = config.medium, config.grid, config.schedule
    v = {
        "medium.E_a": _fmt(m.levels.E_a),
        "medium.E_b": _fmt(m.levels.E_b),
        "medium.E_c": _fmt(m.levels.E_c),
        "medium.E_d": _fmt(m.levels.E_d),
        "medium.gamma_ab": _fmt(m.decays.gamma_ab),
        "medium.gamma_ac": _fmt(m.decays.gamma_ac),
        "medium.gamma_db": _fmt(m.decays.gamma_db),
        "medium.gamma_dc": _fmt(m.decays.gamma_dc),
        "medium.N": _fmt(m.N),
        "medium.L": _fmt(m.L),
    }
    for k, d in enumerate(m.dipoles, start=1):
        v[f"medium.d{k}"] = _fmt(d) if resolved else AUTO
    v["grid.nz"] = str(g.nz)
    v["grid.dt"] = _fmt(g.dt)
    v["grid.nt"] = str(g.nt) if resolved else AUTO
    v["grid.scheme"] = config.scheme
    v["probe.eps10"] = _fmt(s.probe.eps10)
    v["probe.t1"] = _fmt(s.probe.t1)
    v["probe.t2"] = _fmt(s.probe.t2)
    if s.probe3 is not None:
        v["probe3.eps10"] = _fmt(s.probe3.eps10)
        v["probe3.t1"] = _fmt(s.probe3.t1)
        v["probe3.t2"] = _fmt(s.probe3.t2)
    for name, ch in (("control2", s.control2), ("control4", s.control4)):
        v[f"{name}.level"] = _fmt(ch.level)
        v[f"{name}.ramp_tau"] = _fmt(ch.events[0].ramp_tau if ch.events else RAMP_TAU)
        v[f"{name}.events"] = _events_text(ch)
    v["run.scenario"] = config.scenario_kind
    v["run.record_every"] = str(config.record_every)
    v["run.peak_threshold"] = _fmt(config.peak_threshold)
    v["run.tail"] = _fmt(config.tail)
    return v


def format_config(config: ScenarioConfig) -> str:
    lines = []
    section = None
    for key, value in config_values(config).items():
        sec = key.split(".", 1)[0]
        if sec != section:
            if section is not None:
                lines.append("")
            lines.append(f"# {sec}")
            section = sec
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _control(name, vals):
    level = vals[f"{name}.level"]
    tau = vals[f"{name}.ramp_tau"]
    events = tuple(SwitchEvent(t, d, tau if etau is None else etau)
                   for d, t, etau in vals[f"{name}.events"])
    try:
        return ControlSchedule(level, events)
    except ValueError as exc:
        raise ConfigError(f"{name}.events: {exc}") from None


def _build(vals, raw) -> ScenarioConfig:
    try:
        levels = LevelScheme(vals["medium.E_a"], vals["medium.E_b"], vals["medium.E_c"], vals["medium.E_d"])
        decays = DecayRates(vals["medium.gamma_ab"], vals["medium.gamma_ac"],
                            vals["medium.gamma_db"], vals["medium.gamma_dc"])
        medium = MediumSpec(levels, decays, vals["medium.N"], vals["medium.L"],
                            *(vals[f"medium.d{k}"] for k in range(1, 5)))
    except ValueError as exc:
        raise ConfigError(f"medium: {exc}") from None

    probes = []
    for name in ("probe", "probe3"):
        if name == "probe3" and not vals.get("probe3.eps10"):
            probes.append(None)
            continue
        if not vals[f"{name}.t2"] > vals[f"{name}.t1"]:
            raise _range_error(f"{name}.t2", raw[f"{name}.t2"], f"> {name}.t1 = {raw[f'{name}.t1']}")
        probes.append(ProbeSpec(vals[f"{name}.eps10"], vals[f"{name}.t1"], vals[f"{name}.t2"]))
    schedule = PulseSchedule(probes[0], _control("control2", vals), _control("control4", vals), probes[1])

    dt = vals["grid.dt"]
    nt = vals["grid.nt"]
    if nt is None:
        nt = steps_for(schedule, dt, vals["run.tail"])
    grid = Grid(vals["grid.nz"], dt, nt, medium.L)
    config = ScenarioConfig(
        medium, grid, schedule, vals["run.scenario"],
        record_every=vals["run.record_every"],
        peak_threshold=vals["run.peak_threshold"],
        tail=vals["run.tail"],
        scheme=vals["grid.scheme"],
    )
    try:
        config.check_horizon()
    except ValueError as exc:
        raise ConfigError(f"grid.nt = {raw['grid.nt']!r}: {exc}") from None
    return config


def parse_config(text: str, scenario: str | None = None, overrides=()) -> ScenarioConfig:
    """Build a ScenarioConfig from a document, a scenario kind and overrides.

    The kind comes from ``scenario`` if given, else ``run.scenario`` in the
    document, else ``custom``.  ``overrides`` holds ``(key, value)`` pairs or
    ``section.key=value`` strings and wins over the document.
    """
    doc = parse_document(text)
    pairs = [parse_override(o) if isinstance(o, str) else o for o in overrides]
    for key, _ in pairs:
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
    kind = scenario or dict(pairs).get("run.scenario") or doc.get("run.scenario") or "custom"
    if kind not in SCENARIO_KINDS:
        raise _range_error("run.scenario", kind, f"one of {', '.join(SCENARIO_KINDS)}")

    raw = config_values(preset(kind), resolved=False)
    raw["probe3.eps10"] = "0.0"
    raw["probe3.t1"] = raw["probe.t1"]
    raw["probe3.t2"] = raw["probe.t2"]
    raw.update(doc)
    raw.update(pairs)
    raw["run.scenario"] = kind
    vals = {key: _convert(key, value) for key, value in raw.items()}
    return _build(vals, raw)
