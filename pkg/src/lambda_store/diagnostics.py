"""Adiabatic-limit formulas, dressed spectrum, and peak extraction.

The polariton amplitude and velocity are evaluated exactly as the closed
forms read, mixed units included; they are diagnostics only and never feed
back into the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import AdiabaticRelationError, NoStoredCoherenceError
from .model import C, EPS0, HBAR, MediumSpec

MIN_COHERENCE = 1e-15


@dataclass(frozen=True)
class PolaritonSample:
    psi: float
    v: float
    sigma_bc_from_12: float
    sigma_bc_from_34: float
    mismatch: float


@dataclass(frozen=True)
class Peak:
    t_center: float
    height: float
    width_fwhm: float

    def __post_init__(self):
        if not (self.height > 0 and self.width_fwhm > 0):
            raise ValueError(f"peak needs positive height and width, got {self}")


def adiabatic_sigma_bc(eps_s, eps_c, d_s, d_c):
    """Raman coherence of the dark state: −(ε_s d_s)/(ε_c d_c)."""
    denom = eps_c * d_c
    if np.any(denom == 0):
        raise AdiabaticRelationError("adiabatic relation inapplicable: control coupling is zero")
    return -(eps_s * d_s) / denom


def _weights(medium: MediumSpec):
    w2 = (medium.d2 / medium.d1) ** 2
    w4 = medium.d4**2 * medium.omega1 / (medium.d3**2 * medium.omega3)
    g = 2.0 * medium.N * HBAR * medium.omega1 / EPS0
    return w2, w4, g


def polariton_psi(eps1, eps3, eps2, eps4, sigma_bc, medium: MediumSpec):
    """Dark-state polariton amplitude built from both Λ channels."""
    w2, w4, g = _weights(medium)
    num = (
        (medium.d2 * eps2 / medium.d1) * eps1
        - g * sigma_bc
        + (medium.d4 * eps4 * medium.omega1 / (medium.d3 * medium.omega3)) * eps3
    )
    den = np.sqrt(w2 * np.square(eps2) + g + w4 * np.square(eps4))
    return num / den


def polariton_velocity(eps2, eps4, medium: MediumSpec):
    """Group velocity of the polariton; 0 with both controls off, → c for strong controls."""
    w2, w4, g = _weights(medium)
    drive = w2 * np.square(eps2) + w4 * np.square(eps4)
    return C * drive / (drive + g)


def nonadiabatic_mismatch(eps1, eps3, eps2, eps4, sigma_bc, medium: MediumSpec):
    """(ratio, corrected_ratio) of the adiabatic coherence to the simulated one.

    The channel-3/4 branch is used whenever ε₄ ≠ 0 and its ratio is scaled by
    √(ω₃/ω₁) for the corrected value.  With only ε₂ on, the channel-1/2
    branch is used and no correction applies.
    """
    s = complex(sigma_bc).real
    if abs(s) < MIN_COHERENCE:
        raise NoStoredCoherenceError(f"no stored coherence (|sigma_bc| = {abs(s):.3e})")
    if eps4 != 0:
        ratio = adiabatic_sigma_bc(eps3, eps4, medium.d3, medium.d4) / s
        return ratio, ratio * math.sqrt(medium.omega3 / medium.omega1)
    if eps2 != 0:
        ratio = adiabatic_sigma_bc(eps1, eps2, medium.d1, medium.d2) / s
        return ratio, ratio
    raise AdiabaticRelationError("adiabatic relation inapplicable: both controls are zero")


def polariton_sample(eps1, eps3, eps2, eps4, sigma_bc, medium: MediumSpec) -> PolaritonSample:
    """Bundle every diagnostic at one point; undefined entries become NaN."""
    s = complex(sigma_bc).real
    s12 = adiabatic_sigma_bc(eps1, eps2, medium.d1, medium.d2) if eps2 != 0 else math.nan
    s34 = adiabatic_sigma_bc(eps3, eps4, medium.d3, medium.d4) if eps4 != 0 else math.nan
    mismatch = s34 / s if abs(s) >= MIN_COHERENCE else math.nan
    return PolaritonSample(
        psi=float(polariton_psi(eps1, eps3, eps2, eps4, s, medium)),
        v=float(polariton_velocity(eps2, eps4, medium)),
        sigma_bc_from_12=s12,
        sigma_bc_from_34=s34,
        mismatch=mismatch,
    )


def interaction_matrix(eps1, eps2, eps3, eps4, medium: MediumSpec):
    """Resonant RWA interaction in the rotating frame, levels ordered (a, b, c, d)."""
    H = np.zeros((4, 4))
    for (i, j), d, e in (((0, 1), medium.d1, eps1), ((0, 2), medium.d2, eps2),
                         ((3, 1), medium.d3, eps3), ((3, 2), medium.d4, eps4)):
        H[i, j] = H[j, i] = -0.5 * d * e
    return H


def dressed_eigenvalues(eps1, eps2, eps3, eps4, medium: MediumSpec):
    """Sorted eigenvalues of the dressed atom; two of them vanish in the dark-state condition."""
    return np.linalg.eigvalsh(interaction_matrix(eps1, eps2, eps3, eps4, medium))


def shifted_overlap(z, before, after, shift):
    """Normalized overlap of ``after`` with ``before`` translated by ``shift`` along z.

    Only the region where the translated profile is defined counts.
    """
    z = np.asarray(z, dtype=float)
    moved = np.interp(z - shift, z, before, left=np.nan, right=np.nan)
    ok = np.isfinite(moved)
    a = moved[ok]
    b = np.asarray(after, dtype=float)[ok]
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    return float(np.dot(a, b) / norm) if norm > 0 else 0.0


def _half_crossing(t, y, i, half, step):
    j = i
    while 0 <= j + step < len(y) and y[j + step] > half:
        j += step
    k = j + step
    if not 0 <= k < len(y):
        return t[j]
    # linear interpolation between j (above) and k (at or below)
    return t[j] + (half - y[j]) * (t[k] - t[j]) / (y[k] - y[j])


def detect_peaks(t, y, min_height, min_prominence=0.0):
    """Local maxima of ``y`` above ``min_height``, sorted in time.

    Centers and heights come from the parabola through the three samples
    around each maximum; FWHM from linear interpolation of the half-height
    crossings.  ``min_prominence`` screens out ripple on a pulse flank.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size == 0:
        raise ValueError("empty series")
    if t.shape != y.shape:
        raise ValueError("t and y must have the same shape")
    if np.any(np.diff(t) <= 0):
        raise ValueError("series must be strictly time-ordered")
    idx, _ = find_peaks(y, height=min_height, prominence=min_prominence or None)
    peaks = []
    for i in idx:
        t0, t1, t2 = t[i - 1], t[i], t[i + 1]
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        coef = np.polyfit([t0 - t1, 0.0, t2 - t1], [y0, y1, y2], 2)
        if coef[0] < 0:
            dx = -coef[1] / (2 * coef[0])
            center = t1 + dx
            height = coef[2] - coef[1] ** 2 / (4 * coef[0])
        else:
            center, height = t1, y1
        half = 0.5 * height
        width = _half_crossing(t, y, i, half, +1) - _half_crossing(t, y, i, half, -1)
        if height > 0 and width > 0:
            peaks.append(Peak(float(center), float(height), float(width)))
    return peaks
