"""End-to-end storage and retrieval runs, their presets, and photon bookkeeping.

All preset timings are in atomic units of time.  The probe occupies
[0, 1e11]; control 2 is switched off near the moment the probe's exit peak
would have left the cell, which parks roughly the trailing half of the pulse
as Raman coherence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import (
    MIN_COHERENCE,
    Peak,
    PolaritonSample,
    adiabatic_sigma_bc,
    detect_peaks,
    nonadiabatic_mismatch,
    polariton_sample,
)
from .errors import NothingReleasedError, NumericalInvariantError
from .field import SCHEMES, Grid, MediumState, WindowStepper
from .model import C, EPS0, HBAR, MediumSpec, paper_medium
from .pulses import ControlSchedule, ProbeSpec, PulseSchedule, SwitchEvent, control_value, probe_envelope

SCENARIO_KINDS = ("single_lambda", "convert", "dual_release_4_first", "dual_release_2_first", "custom")
PRESET_KINDS = SCENARIO_KINDS[:4]

PROBE_EPS10 = 1e-10
PROBE_T1, PROBE_T2 = 0.0, 1e11
CONTROL_LEVEL = 1.2e-9
RAMP_TAU = 5e8
T_STORE = 1.1e11
T_RELEASE = 2.5e11
DUAL_DELAY = 2e10
TAIL = 2e11
NZ = 201
DT = 2e7
RECORD_EVERY = 50
PEAK_THRESHOLD = 0.02

# runtime monitor limits, checked at every recorded step over the whole grid
MONITOR_LIMITS = {
    "trace": 1e-9,
    "hermiticity": 1e-12,
    "min_eigenvalue": -1e-7,
    "phase": 1e-10,
}


@dataclass(frozen=True)
class ScenarioConfig:
    medium: MediumSpec
    grid: Grid
    schedule: PulseSchedule
    scenario_kind: str = "custom"
    record_every: int = RECORD_EVERY
    peak_threshold: float = PEAK_THRESHOLD
    tail: float = TAIL
    scheme: str = "rk4"

    def __post_init__(self):
        if self.scenario_kind not in SCENARIO_KINDS:
            raise ValueError(f"scenario_kind must be one of {SCENARIO_KINDS}, got {self.scenario_kind!r}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be an integer >= 1, got {self.record_every}")
        if not 0 < self.peak_threshold < 1:
            raise ValueError(f"peak_threshold must lie in (0, 1), got {self.peak_threshold}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if abs(self.grid.L - self.medium.L) > 1e-12 * self.medium.L:
            raise ValueError(f"grid length {self.grid.L} differs from medium length {self.medium.L}")

    @property
    def last_event(self):
        s = self.schedule
        ends = [s.probe.t2] + s.event_times()
        if s.probe3 is not None:
            ends.append(s.probe3.t2)
        return max(ends)

    @property
    def required_horizon(self):
        """Last scheduled event plus one probe length."""
        return self.last_event + self.schedule.probe.length

    def check_horizon(self):
        if self.grid.horizon < self.required_horizon * (1 - 1e-12):
            raise ValueError(
                f"horizon nt*dt = {self.grid.horizon:.6e} truncates the schedule; need at least "
                f"{self.required_horizon:.6e} (last event {self.last_event:.6e} + one pulse length)"
            )


def steps_for(schedule: PulseSchedule, dt, tail=TAIL):
    """Step count covering every event of ``schedule`` plus ``tail``."""
    ends = [schedule.probe.t2] + schedule.event_times()
    if schedule.probe3 is not None:
        ends.append(schedule.probe3.t2)
    return int(math.ceil((max(ends) + tail) / dt - 1e-9))


def preset_schedule(kind) -> PulseSchedule:
    probe = ProbeSpec(PROBE_EPS10, PROBE_T1, PROBE_T2)
    store = SwitchEvent(T_STORE, "off", RAMP_TAU)

    def on(t):
        return SwitchEvent(t, "on", RAMP_TAU)

    if kind in ("single_lambda", "custom"):
        c2 = ControlSchedule(CONTROL_LEVEL, (store, on(T_RELEASE)))
        c4 = ControlSchedule(0.0)
    elif kind == "convert":
        c2 = ControlSchedule(CONTROL_LEVEL, (store,))
        c4 = ControlSchedule(CONTROL_LEVEL, (on(T_RELEASE),))
    elif kind == "dual_release_4_first":
        c2 = ControlSchedule(CONTROL_LEVEL, (store, on(T_RELEASE + DUAL_DELAY)))
        c4 = ControlSchedule(CONTROL_LEVEL, (on(T_RELEASE),))
    elif kind == "dual_release_2_first":
        c2 = ControlSchedule(CONTROL_LEVEL, (store, on(T_RELEASE)))
        c4 = ControlSchedule(CONTROL_LEVEL, (on(T_RELEASE + DUAL_DELAY),))
    else:
        raise ValueError(f"unknown scenario kind {kind!r}; expected one of {SCENARIO_KINDS}")
    return PulseSchedule(probe, c2, c4)


def preset(kind, medium: MediumSpec | None = None, nz=NZ, dt=DT, tail=TAIL) -> ScenarioConfig:
    """Default configuration of one of the named scenarios."""
    medium = paper_medium() if medium is None else medium
    schedule = preset_schedule(kind)
    grid = Grid(nz, dt, steps_for(schedule, dt, tail), medium.L)
    return ScenarioConfig(medium, grid, schedule, kind, tail=tail)


def with_grid(config: ScenarioConfig, nz=None, dt=None) -> ScenarioConfig:
    """Same scenario on another grid, nt rescaled to keep the horizon."""
    g = config.grid
    nz = g.nz if nz is None else nz
    dt = g.dt if dt is None else dt
    nt = int(round(g.horizon / dt))
    return replace(config, grid=Grid(nz, dt, nt, g.L))


@dataclass
class MidTrace:
    """Per-step values at the diagnostic point z = L/2."""

    t: np.ndarray
    eps1: np.ndarray
    eps3: np.ndarray
    eps2: np.ndarray
    eps4: np.ndarray
    sigma_bc: np.ndarray


@dataclass
class SimulationRecord:
    config: ScenarioConfig
    exit_series: np.ndarray  # (nt, 5): t', eps1(L), eps3(L), eps2, eps4
    coherence_t: np.ndarray
    coherence_map: np.ndarray  # (n_snap, nz) complex sigma_bc
    eps1_map: np.ndarray
    eps3_map: np.ndarray
    population_trace: np.ndarray  # (nt, 2): trace and min eigenvalue at mid
    mid: MidTrace
    peaks_eps1: list[Peak]
    peaks_eps3: list[Peak]
    diagnostics_t: np.ndarray
    diagnostics_series: list[PolaritonSample]
    monitors: dict = field(default_factory=dict)

    @property
    def t(self):
        return self.exit_series[:, 0]

    @property
    def z(self):
        return self.config.grid.z


def _grid_monitors(sig):
    tr = np.trace(sig, axis1=1, axis2=2)
    scale = np.abs(sig).reshape(sig.shape[0], -1).max(axis=1)
    phase = max((np.abs(sig[:, 0, 1].real) / scale).max(), (np.abs(sig[:, 3, 1].real) / scale).max())
    return {
        "trace": float(np.abs(tr - 1.0).max()),
        "min_eigenvalue": float(np.linalg.eigvalsh(sig)[:, 0].min()),
        "phase": float(phase),
    }


def _check_monitors(mon, t):
    lim = MONITOR_LIMITS
    for name in ("trace", "hermiticity", "phase"):
        if mon[name] > lim[name]:
            raise NumericalInvariantError(name, f"{mon[name]:.3e} exceeds {lim[name]:g}", t=t)
    if mon["min_eigenvalue"] < lim["min_eigenvalue"]:
        raise NumericalInvariantError(
            "min_eigenvalue", f"{mon['min_eigenvalue']:.3e} below {lim['min_eigenvalue']:g}", t=t)


def run_scenario(config: ScenarioConfig, backend=None) -> SimulationRecord:
    """Integrate the coupled system over the configured horizon.

    The run stops with NumericalInvariantError the first time a monitor in
    MONITOR_LIMITS is exceeded at a recorded step.
    """
    config.check_horizon()
    medium, grid, sched = config.medium, config.grid, config.schedule
    nz, nt, dt, mid = grid.nz, grid.nt, grid.dt, grid.mid
    stepper = WindowStepper(grid, medium, sched, backend, config.scheme)

    sig = MediumState.ground(nz).states
    e1, e3 = stepper.initial_fields(sig, 0.0)

    t = dt * np.arange(1, nt + 1)
    exit_series = np.empty((nt, 5))
    exit_series[:, 0] = t
    exit_series[:, 3] = control_value(sched.control2, t)
    exit_series[:, 4] = control_value(sched.control4, t)
    e1_mid = np.empty(nt)
    e3_mid = np.empty(nt)
    sbc_mid = np.empty(nt, dtype=np.complex128)
    pop = np.empty((nt, 2))

    snaps = [n for n in range(nt) if (n + 1) % config.record_every == 0]
    if not snaps or snaps[-1] != nt - 1:
        snaps.append(nt - 1)
    snap_set = set(snaps)
    coh = np.empty((len(snaps), nz), dtype=np.complex128)
    e1_map = np.empty((len(snaps), nz))
    e3_map = np.empty((len(snaps), nz))

    mon = {"trace": 0.0, "hermiticity": 0.0, "min_eigenvalue": 1.0, "phase": 0.0}
    k = 0
    for n in range(nt):
        sig, e1, e3 = stepper.step(sig, e1, e3, n * dt)
        exit_series[n, 1] = e1[-1]
        exit_series[n, 2] = e3[-1]
        s = sig[mid]
        e1_mid[n] = e1[mid]
        e3_mid[n] = e3[mid]
        sbc_mid[n] = s[1, 2]
        pop[n, 0] = s[0, 0].real + s[1, 1].real + s[2, 2].real + s[3, 3].real
        pop[n, 1] = np.linalg.eigvalsh(s)[0]
        mon["hermiticity"] = max(mon["hermiticity"], stepper.herm_residual)
        if n in snap_set:
            coh[k] = sig[:, 1, 2]
            e1_map[k] = e1
            e3_map[k] = e3
            k += 1
            g = _grid_monitors(sig)
            mon["trace"] = max(mon["trace"], g["trace"])
            mon["phase"] = max(mon["phase"], g["phase"])
            mon["min_eigenvalue"] = min(mon["min_eigenvalue"], g["min_eigenvalue"])
            _check_monitors(mon, t[n])

    mid_trace = MidTrace(t, e1_mid, e3_mid, exit_series[:, 3].copy(), exit_series[:, 4].copy(), sbc_mid)
    diag_idx = np.array(snaps)
    diagnostics = [
        polariton_sample(e1_mid[n], e3_mid[n], mid_trace.eps2[n], mid_trace.eps4[n], sbc_mid[n], medium)
        for n in diag_idx
    ]
    thr = config.peak_threshold * _input_scale(sched)
    return SimulationRecord(
        config=config,
        exit_series=exit_series,
        coherence_t=t[diag_idx],
        coherence_map=coh,
        eps1_map=e1_map,
        eps3_map=e3_map,
        population_trace=pop,
        mid=mid_trace,
        peaks_eps1=detect_peaks(t, exit_series[:, 1], thr, thr),
        peaks_eps3=detect_peaks(t, exit_series[:, 2], thr, thr),
        diagnostics_t=t[diag_idx],
        diagnostics_series=diagnostics,
        monitors=mon,
    )


def _input_scale(sched: PulseSchedule):
    amp = sched.probe.eps10
    if sched.probe3 is not None:
        amp = max(amp, sched.probe3.eps10)
    return amp


def photon_weight(omega):
    """Quanta per unit time per unit area for a unit-amplitude envelope: (c ε₀/2)/(ħω)."""
    return 0.5 * C * EPS0 / (HBAR * omega)


def quanta(series, omega, dt):
    """Photon number (per unit area) carried by a sampled envelope."""
    return float(photon_weight(omega) * np.sum(np.square(series)) * dt)


def release_window(record: SimulationRecord):
    """(t_store, t_release): the storage switch-off and the first later switch-on."""
    sched = record.config.schedule
    offs = sched.control2.off_times() + sched.control4.off_times()
    if not offs:
        raise NothingReleasedError("nothing released: no control is ever switched off")
    t_off = min(offs)
    ons = [t for t in sched.control2.on_times() + sched.control4.on_times() if t > t_off]
    if not ons:
        raise NothingReleasedError("nothing released: no control is switched back on")
    return t_off, min(ons)


def split_time(record: SimulationRecord):
    """Boundary between the untrapped and the released parts of the exit series."""
    t_off, t_on = release_window(record)
    return 0.5 * (t_off + t_on)


def released_energy_split(record: SimulationRecord):
    """Fractions of the released photons leaving on channel 1 and channel 3."""
    ts = split_time(record)
    released = [p for p in record.peaks_eps1 + record.peaks_eps3 if p.t_center > ts]
    if not released:
        raise NothingReleasedError("nothing released: no exit peak after the control switch-on")
    m = record.config.medium
    after = record.t > ts
    dt = record.config.grid.dt
    q1 = quanta(record.exit_series[after, 1], m.omega1, dt)
    q3 = quanta(record.exit_series[after, 2], m.omega3, dt)
    total = q1 + q3
    if total <= 0:
        raise NothingReleasedError("nothing released: zero photon flux after the switch-on")
    return q1 / total, q3 / total


@dataclass(frozen=True)
class QuantaBudget:
    input: float
    untrapped: float
    released_eps1: float
    released_eps3: float

    @property
    def released(self):
        return self.released_eps1 + self.released_eps3

    @property
    def deficit(self):
        """Photons lost to spontaneous emission or still stored in the medium."""
        return self.input - self.untrapped - self.released

    @property
    def balance(self):
        return (self.untrapped + self.released) / self.input


def quanta_budget(record: SimulationRecord) -> QuantaBudget:
    cfg = record.config
    m, dt, t = cfg.medium, cfg.grid.dt, record.t
    sched = cfg.schedule
    q_in = quanta(probe_envelope(sched.probe, t), m.omega1, dt)
    if sched.probe3 is not None:
        q_in += quanta(probe_envelope(sched.probe3, t), m.omega3, dt)
    ts = split_time(record)
    before = t <= ts
    after = ~before
    ex = record.exit_series
    untrapped = quanta(ex[before, 1], m.omega1, dt) + quanta(ex[before, 2], m.omega3, dt)
    return QuantaBudget(
        input=q_in,
        untrapped=untrapped,
        released_eps1=quanta(ex[after, 1], m.omega1, dt),
        released_eps3=quanta(ex[after, 2], m.omega3, dt),
    )


def storage_coherence_error(record: SimulationRecord, plateau=0.999, overlap=0.5):
    """Relative deviation of σ_bc at mid-sample from the channel-1/2 dark-state value.

    Samples are taken before the storage switch-off while ε₂ sits on its
    plateau (≥ ``plateau`` × level, ε₄ = 0) and the signal at mid-sample is
    at least ``overlap`` × its maximum.  Returns (t, relative error).
    """
    mt = record.mid
    m = record.config.medium
    sched = record.config.schedule
    level2 = sched.control2.level
    t_off = min(sched.control2.off_times(), default=np.inf)
    e1max = np.abs(mt.eps1[mt.t < t_off]).max(initial=0.0)
    sel = (
        (mt.t < t_off)
        & (mt.eps2 >= plateau * level2)
        & (mt.eps4 == 0)
        & (np.abs(mt.eps1) >= overlap * e1max)
    )
    if level2 == 0 or not sel.any():
        return mt.t[:0], mt.t[:0]
    adi = adiabatic_sigma_bc(mt.eps1[sel], mt.eps2[sel], m.d1, m.d2)
    err = np.abs(mt.sigma_bc[sel].real - adi) / np.abs(adi)
    return mt.t[sel], err


def release_mismatch(record: SimulationRecord, plateau=0.999, off_fraction=1e-3, signal=0.1):
    """Channel-3/4 mismatch ratios at mid-sample during the release.

    Samples have ε₄ on its plateau, ε₂ below ``off_fraction`` of its level,
    |ε₃| at least ``signal`` × its maximum and a nonzero stored coherence.
    Returns (t, ratio, corrected_ratio).
    """
    mt = record.mid
    m = record.config.medium
    sched = record.config.schedule
    level2, level4 = sched.control2.level, sched.control4.level
    if level4 == 0:
        return mt.t[:0], mt.t[:0], mt.t[:0]
    e3max = np.abs(mt.eps3).max()
    sel = (
        (mt.eps4 >= plateau * level4)
        & (mt.eps2 <= off_fraction * level2)
        & (np.abs(mt.eps3) >= signal * e3max)
        & (np.abs(mt.sigma_bc.real) >= MIN_COHERENCE)
    )
    idx = np.flatnonzero(sel)
    pairs = np.array(
        [nonadiabatic_mismatch(mt.eps1[n], mt.eps3[n], mt.eps2[n], mt.eps4[n], mt.sigma_bc[n], m)
         for n in idx]
    ).reshape(-1, 2)
    return mt.t[idx], pairs[:, 0], pairs[:, 1]
