"""Density-matrix dynamics of a resonant double-Λ atom at a single point."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from ._kernels import rhs_into, rk4_into
from .errors import NumericalInvariantError
from .model import MediumSpec

LEVELS = "abcd"
A, B, C, D = 0, 1, 2, 3

TRACE_STEP_LIMIT = 1e-6


class LocalFields(NamedTuple):
    eps1: float = 0.0
    eps2: float = 0.0
    eps3: float = 0.0
    eps4: float = 0.0


def ground_state() -> np.ndarray:
    """σ = |b><b|, the initial state everywhere in the medium."""
    sigma = np.zeros((4, 4), dtype=np.complex128)
    sigma[B, B] = 1.0
    return sigma


def projector(level: str) -> np.ndarray:
    k = LEVELS.index(level)
    sigma = np.zeros((4, 4), dtype=np.complex128)
    sigma[k, k] = 1.0
    return sigma


def _level_first(a):
    return a if a.ndim == 2 else np.moveaxis(a, 0, -1)


def liouville_rhs(state, fields: LocalFields, medium: MediumSpec) -> np.ndarray:
    """dσ/dt for one 4×4 state, or a stack of them with shape (n, 4, 4).

    Field amplitudes may be scalars or, for a stack, length-n arrays.
    """
    state = np.asarray(state, dtype=np.complex128)
    out = np.empty_like(state)
    h = [0.5 * d * np.asarray(e, dtype=float) for d, e in zip(medium.dipoles, fields)]
    g = medium.decays
    rhs_into(_level_first(state), *h, g.gamma_ab, g.gamma_ac, g.gamma_db, g.gamma_dc,
             _level_first(out))
    return out


def hermitize(sigma):
    return 0.5 * (sigma + np.conj(np.swapaxes(sigma, -1, -2)))


def step_atoms(
    state,
    fields_at: Callable[[float], LocalFields],
    t: float,
    dt: float,
    medium: MediumSpec,
) -> np.ndarray:
    """One RK4 step of a single density matrix, then re-Hermitize.

    ``fields_at`` is sampled at t, t + dt/2 and t + dt.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    state = np.asarray(state, dtype=np.complex128)
    f0, fm, f1 = fields_at(t), fields_at(t + 0.5 * dt), fields_at(t + dt)
    c2 = np.array([f0.eps2, fm.eps2, f1.eps2])
    c4 = np.array([f0.eps4, fm.eps4, f1.eps4])
    dip = np.array(medium.dipoles)
    g = medium.decays
    gam = np.array([g.gamma_ab, g.gamma_ac, g.gamma_db, g.gamma_dc])
    out = np.empty_like(state)
    work = [np.empty_like(state) for _ in range(5)]
    rk4_into(state, f0.eps1, fm.eps1, f1.eps1, f0.eps3, fm.eps3, f1.eps3,
             c2, c4, dt, dip, gam, out, *work)
    out = hermitize(out)
    drift = abs(np.trace(out) - np.trace(state))
    if not drift <= TRACE_STEP_LIMIT:  # also catches NaN
        raise NumericalInvariantError(
            "trace", f"trace drift {drift:.3e} in one step exceeds {TRACE_STEP_LIMIT:g}; reduce dt",
            t=t,
        )
    return out


def check_density_matrix(sigma, trace_tol=1e-9, herm_tol=1e-12, pop_tol=1e-9):
    """Raise NumericalInvariantError if ``sigma`` is not a valid density matrix."""
    sigma = np.asarray(sigma)
    herm = np.abs(sigma - np.conj(sigma.T)).max()
    if herm > herm_tol:
        raise NumericalInvariantError("hermiticity", f"residual {herm:.3e}")
    tr = np.trace(sigma)
    if abs(tr - 1.0) > trace_tol:
        raise NumericalInvariantError("trace", f"trace {tr:.12g}")
    pops = np.diag(sigma).real
    if pops.min() < -pop_tol or pops.max() > 1 + pop_tol:
        raise NumericalInvariantError("population", f"diagonal outside [0, 1]: {pops}")


__all__ = [
    "LocalFields",
    "check_density_matrix",
    "ground_state",
    "hermitize",
    "liouville_rhs",
    "projector",
    "step_atoms",
]
