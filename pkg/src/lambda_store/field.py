"""Signal-field propagation in the moving window t′ = t − z/c, z′ = z.

In window coordinates the propagation equations lose their time derivative,
so at fixed t′ each signal envelope is a running z-integral of its source
coherence.  Atoms at every grid point are ODEs in t′ whose drive depends on
that integral, which is what a window step has to couple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import get_backend
from .bloch import TRACE_STEP_LIMIT, ground_state
from .errors import NumericalInvariantError
from .model import MediumSpec
from .pulses import PulseSchedule, control_value

PHASE_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    nz: int
    dt: float
    nt: int
    L: float
    window: bool = True

    def __post_init__(self):
        if int(self.nz) != self.nz or self.nz < 2:
            raise ValueError(f"nz must be an integer >= 2, got {self.nz}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if int(self.nt) != self.nt or self.nt < 1:
            raise ValueError(f"nt must be an integer >= 1, got {self.nt}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def dz(self):
        return self.L / (self.nz - 1)

    @property
    def z(self):
        return np.linspace(0.0, self.L, self.nz)

    @property
    def horizon(self):
        return self.nt * self.dt

    @property
    def mid(self):
        """Index of the diagnostic point z = L/2 (nearest grid point)."""
        return (self.nz - 1) // 2


@dataclass
class FieldState:
    eps1: np.ndarray
    eps3: np.ndarray
    eps2: float = 0.0
    eps4: float = 0.0


@dataclass
class MediumState:
    states: np.ndarray  # (nz, 4, 4) complex

    @classmethod
    def ground(cls, nz):
        return cls(np.broadcast_to(ground_state(), (nz, 4, 4)).copy())

    def __len__(self):
        return self.states.shape[0]


def _check_phase(resid, e1, e3, t=None):
    scale = max(np.abs(e1).max(), np.abs(e3).max())
    if resid > PHASE_TOL * scale:
        raise NumericalInvariantError(
            "phase",
            f"imaginary residual {resid:.3e} of the integrated envelope exceeds "
            f"{PHASE_TOL:g} x max|eps| = {PHASE_TOL * scale:.3e}",
            t=t,
        )


def propagate_signals(medium_state: MediumState, boundary_eps1: float, boundary_eps3: float,
                      grid: Grid, medium: MediumSpec, backend=None):
    """Trapezoidal z-integration of ∂ε₁/∂z = iκ₁σ_ab and ∂ε₃/∂z = iκ₃σ_db.

    Returns the real envelopes (ε₁(z), ε₃(z)).
    """
    kern = get_backend(backend)
    sig = medium_state.states
    if sig.shape[0] != grid.nz:
        raise ValueError(f"medium state has {sig.shape[0]} points, grid has {grid.nz}")
    if not (math.isfinite(boundary_eps1) and math.isfinite(boundary_eps3)):
        raise ValueError("boundary values must be finite")
    e1 = np.empty(grid.nz)
    e3 = np.empty(grid.nz)
    resid = kern.propagate(sig, float(boundary_eps1), float(boundary_eps3),
                           medium.kappa1, medium.kappa3, grid.dz, e1, e3)
    _check_phase(resid, e1, e3)
    return e1, e3


SCHEMES = ("rk4", "pc")


class WindowStepper:
    """Holds the per-run constants and scratch arrays for repeated window steps.

    ``scheme="rk4"`` (default) runs classical RK4 on the whole grid, refreshing
    ε₁(z), ε₃(z) from the stage coherences before every stage.  ``scheme="pc"``
    is the cheaper single predictor-corrector pass: atoms advanced with frozen
    signal fields, fields recomputed, atoms redone with the fields linearly
    interpolated across the step.  The first is fourth order in the atom-field
    coupling, the second only second order.

    After each call, ``herm_residual`` and ``trace_drift`` hold the largest
    anti-Hermitian residual removed by re-Hermitization and the largest
    single-step trace change over the grid.
    """

    def __init__(self, grid: Grid, medium: MediumSpec, schedule: PulseSchedule,
                 backend=None, scheme="rk4"):
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
        self.grid = grid
        self.medium = medium
        self.schedule = schedule
        self.scheme = scheme
        self.kern = get_backend(backend)
        self.dip = np.array(medium.dipoles, dtype=float)
        g = medium.decays
        self.gam = np.array([g.gamma_ab, g.gamma_ac, g.gamma_db, g.gamma_dc], dtype=float)
        nz = grid.nz
        self._stage = np.empty((nz, 4, 4), dtype=np.complex128)
        self._es1 = np.empty(nz)
        self._es3 = np.empty(nz)
        self._e1n = np.empty((3, nz))
        self._e3n = np.empty((3, nz))
        self.herm_residual = 0.0
        self.trace_drift = 0.0

    def controls(self, t):
        """(ε₂, ε₄) at the RK nodes t, t + dt/2, t + dt."""
        nodes = np.array([t, t + 0.5 * self.grid.dt, t + self.grid.dt])
        return (np.asarray(control_value(self.schedule.control2, nodes)),
                np.asarray(control_value(self.schedule.control4, nodes)))

    def fields(self, sig, t, e1=None, e3=None):
        """Signal envelopes over z for coherences ``sig`` at window time ``t``."""
        b1, b3 = self.schedule.boundary(t)
        e1 = np.empty(self.grid.nz) if e1 is None else e1
        e3 = np.empty(self.grid.nz) if e3 is None else e3
        resid = self.kern.propagate(sig, b1, b3, self.medium.kappa1, self.medium.kappa3,
                                    self.grid.dz, e1, e3)
        _check_phase(resid, e1, e3, t)
        return e1, e3

    def initial_fields(self, sig, t=0.0):
        return self.fields(sig, t)

    def step(self, sig, e1, e3, t):
        """Advance (σ, ε₁, ε₃) from window time t to t + dt; returns new arrays."""
        c2, c4 = self.controls(t)
        new = np.empty_like(sig)
        if self.scheme == "rk4":
            self._coupled_rk4(sig, e1, e3, t, c2, c4, new)
        else:
            self._predictor_corrector(sig, e1, e3, t, c2, c4, new)
        t_new = t + self.grid.dt
        herm, drift, bad = self.kern.finalize(sig, new)
        if bad >= 0:
            raise NumericalInvariantError("finite", "non-finite density matrix", z_index=bad,
                                          t=t_new)
        if not drift <= TRACE_STEP_LIMIT:
            raise NumericalInvariantError(
                "trace", f"trace drift {drift:.3e} in one step; reduce dt", t=t_new)
        self.herm_residual = herm
        self.trace_drift = drift
        e1_new, e3_new = self.fields(new, t_new)
        if not (np.isfinite(e1_new).all() and np.isfinite(e3_new).all()):
            bad = int(np.argmin(np.isfinite(e1_new) & np.isfinite(e3_new)))
            raise NumericalInvariantError("finite", "non-finite field", z_index=bad, t=t_new)
        return new, e1_new, e3_new

    def _coupled_rk4(self, sig, e1, e3, t, c2, c4, out):
        dt = self.grid.dt
        bounds = [self.schedule.boundary(tn) for tn in (t, t + 0.5 * dt, t + dt)]
        b1 = np.array([b[0] for b in bounds])
        b3 = np.array([b[1] for b in bounds])
        worst = self.kern.coupled_step(sig, e1, e3, c2, c4, b1, b3, dt, self.grid.dz,
                                       self.medium.kappa1, self.medium.kappa3,
                                       self.dip, self.gam, out)
        if worst > PHASE_TOL:
            raise NumericalInvariantError(
                "phase", f"stage field imaginary residual ratio {worst:.3e} exceeds {PHASE_TOL:g}",
                t=t)

    def _predictor_corrector(self, sig, e1, e3, t, c2, c4, out):
        dt = self.grid.dt
        kern = self.kern
        self._e1n[:] = e1
        self._e3n[:] = e3
        kern.rk4_all(sig, self._e1n, self._e3n, c2, c4, dt, self.dip, self.gam, self._stage)
        e1p, e3p = self.fields(self._stage, t + dt, self._es1, self._es3)
        self._e1n[1] = 0.5 * (e1 + e1p)
        self._e1n[2] = e1p
        self._e3n[1] = 0.5 * (e3 + e3p)
        self._e3n[2] = e3p
        kern.rk4_all(sig, self._e1n, self._e3n, c2, c4, dt, self.dip, self.gam, out)


def advance_window_step(fields: FieldState, medium_state: MediumState,
                        schedules: PulseSchedule, t: float, grid: Grid,
                        medium: MediumSpec, backend=None, scheme="rk4"):
    """One coupled atom-field step from window time t to t + dt.

    ``fields`` must be consistent with ``medium_state`` at time t.
    """
    if len(medium_state) != grid.nz or fields.eps1.shape != (grid.nz,):
        raise ValueError("field and medium arrays must match grid.nz")
    stepper = WindowStepper(grid, medium, schedules, backend, scheme)
    sig, e1, e3 = stepper.step(medium_state.states, fields.eps1, fields.eps3, t)
    t_new = t + grid.dt
    return (
        FieldState(e1, e3, control_value(schedules.control2, t_new),
                   control_value(schedules.control4, t_new)),
        MediumState(sig),
    )
