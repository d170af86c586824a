"""Probe envelope and control-field switching schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ProbeSpec:
    """sin² probe pulse on channel 1, nonzero on [t1, t2]."""

    eps10: float
    t1: float
    t2: float

    def __post_init__(self):
        if not self.t2 > self.t1:
            raise ValueError(f"probe.t2 must exceed probe.t1 (t1={self.t1}, t2={self.t2})")
        if not self.eps10 >= 0:
            raise ValueError(f"probe.eps10 must be >= 0, got {self.eps10}")

    @property
    def length(self):
        return self.t2 - self.t1

    @property
    def center(self):
        return 0.5 * (self.t1 + self.t2)


@dataclass(frozen=True)
class SwitchEvent:
    t_switch: float
    direction: str
    ramp_tau: float

    def __post_init__(self):
        if self.direction not in ("on", "off"):
            raise ValueError(f"direction must be 'on' or 'off', got {self.direction!r}")
        if not self.ramp_tau > 0:
            raise ValueError(f"ramp_tau must be positive, got {self.ramp_tau}")


@dataclass(frozen=True)
class ControlSchedule:
    """A spatially uniform control field: peak ``level`` gated by tanh ramps.

    With no events the field sits at ``level`` for all time.  The first event
    decides the initial state (an ``off`` first means the field starts on).
    """

    level: float = 0.0
    events: tuple[SwitchEvent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not self.level >= 0:
            raise ValueError(f"control level must be >= 0, got {self.level}")
        for prev, nxt in zip(self.events, self.events[1:]):
            if not nxt.t_switch > prev.t_switch:
                raise ValueError("switch events must be strictly time-ordered")
            if nxt.direction == prev.direction:
                raise ValueError("switch events must alternate between on and off")

    @property
    def initially_on(self):
        return not self.events or self.events[0].direction == "off"

    def on_times(self):
        return [e.t_switch for e in self.events if e.direction == "on"]

    def off_times(self):
        return [e.t_switch for e in self.events if e.direction == "off"]

    def shifted(self, delta):
        return ControlSchedule(
            self.level,
            tuple(SwitchEvent(e.t_switch + delta, e.direction, e.ramp_tau) for e in self.events),
        )


@dataclass(frozen=True)
class PulseSchedule:
    """Probe(s) entering at z = 0 plus the two control channels.

    ``probe3`` is an optional second input pulse on channel 3, for storing
    two pulses at once; normally channel 3 enters empty.
    """

    probe: ProbeSpec
    control2: ControlSchedule = field(default_factory=ControlSchedule)
    control4: ControlSchedule = field(default_factory=ControlSchedule)
    probe3: ProbeSpec | None = None

    def event_times(self):
        return sorted(e.t_switch for ch in (self.control2, self.control4) for e in ch.events)

    def shifted(self, delta):
        p = self.probe
        return PulseSchedule(
            ProbeSpec(p.eps10, p.t1 + delta, p.t2 + delta),
            self.control2.shifted(delta),
            self.control4.shifted(delta),
            None if self.probe3 is None else ProbeSpec(
                self.probe3.eps10, self.probe3.t1 + delta, self.probe3.t2 + delta),
        )

    def boundary(self, t):
        """Entrance-face signal amplitudes (ε₁, ε₃) at window time ``t``."""
        b3 = 0.0 if self.probe3 is None else probe_envelope(self.probe3, t)
        return probe_envelope(self.probe, t), b3


def probe_envelope(spec: ProbeSpec, t):
    """ε₁₀ sin²(π(t − t₂)/(t₂ − t₁)) inside [t₁, t₂], zero outside.

    Accepts scalars or arrays.
    """
    if isinstance(t, (float, int)):
        if not spec.t1 <= t <= spec.t2:
            return 0.0
        return spec.eps10 * math.sin(math.pi * (t - spec.t2) / (spec.t2 - spec.t1)) ** 2
    t = np.asarray(t, dtype=float)
    phase = math.pi * (t - spec.t2) / (spec.t2 - spec.t1)
    val = spec.eps10 * np.sin(phase) ** 2
    val = np.where((t >= spec.t1) & (t <= spec.t2), val, 0.0)
    return val if val.ndim else float(val)


def control_value(channel: ControlSchedule, t):
    """Control amplitude: ``level`` times a sum of tanh on-windows.

    Each on-interval [t_on, t_off] contributes
    ½(tanh((t − t_on)/τ_on) − tanh((t − t_off)/τ_off)); an interval open at
    either end uses ±1 for the missing edge.  For alternating events the sum
    stays in [0, 1]; it is clipped there to cover mixed ramp constants.
    """
    t = np.asarray(t, dtype=float)
    gate = np.zeros(t.shape, dtype=float)
    rise = 1.0 if channel.initially_on else None
    for ev in channel.events:
        edge = np.tanh((t - ev.t_switch) / ev.ramp_tau)
        if ev.direction == "on":
            rise = edge
        else:
            gate = gate + 0.5 * (rise - edge)
            rise = None
    if rise is not None:
        gate = gate + 0.5 * (rise + 1.0)
    val = channel.level * np.clip(gate, 0.0, 1.0)
    return val if val.ndim else float(val)
