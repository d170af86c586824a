"""Hot loops of the Maxwell-Bloch step.

Every kernel body is written once against a *level-first* view of the density
matrices: ``s[i, j]`` is a scalar for one grid point (numba path, looping over
z) or a length-``nz`` vector (numpy path, ``sigma.transpose(1, 2, 0)``).  The
backend is picked at import time from ``LAMBDA_STORE_BACKEND`` (``numba`` or
``numpy``); numba is the default when it imports.
"""

from __future__ import annotations

import os
from types import FunctionType, SimpleNamespace

import numpy as np

A, B, C_, D = 0, 1, 2, 3


def rhs_into(s, h1, h2, h3, h4, gab, gac, gdb, gdc, out):
    """dσ/dt of the resonant double-Λ equations, ħ = 1, hⱼ = dⱼεⱼ/2."""
    ga = gab + gac
    gd = gdb + gdc
    saa = s[A, A]
    sbb = s[B, B]
    scc = s[C_, C_]
    sdd = s[D, D]
    sab = s[A, B]
    sac = s[A, C_]
    sad = s[A, D]
    sbc = s[B, C_]
    sbd = s[B, D]
    scd = s[C_, D]
    sba = s[B, A]
    sca = s[C_, A]
    scb = s[C_, B]
    sdb = s[D, B]
    sdc = s[D, C_]

    out[A, A] = 1j * h1 * (sba - sab) + 1j * h2 * (sca - sac) - ga * saa
    out[B, B] = 1j * h1 * (sab - sba) + 1j * h3 * (sdb - sbd) + gab * saa + gdb * sdd
    out[C_, C_] = 1j * h2 * (sac - sca) + 1j * h4 * (sdc - scd) + gac * saa + gdc * sdd
    out[D, D] = 1j * h3 * (sbd - sdb) + 1j * h4 * (scd - sdc) - gd * sdd

    out[A, B] = 1j * h1 * (sbb - saa) + 1j * h2 * scb - 1j * h3 * sad - 0.5 * ga * sab
    out[A, C_] = 1j * h1 * sbc + 1j * h2 * (scc - saa) - 1j * h4 * sad - 0.5 * ga * sac
    out[A, D] = (
        1j * h1 * sbd
        + 1j * h2 * scd
        - 1j * h3 * sab
        - 1j * h4 * sac
        - 0.5 * (ga + gd) * sad
    )
    out[B, C_] = 1j * h1 * sac - 1j * h2 * sba + 1j * h3 * sdc - 1j * h4 * sbd
    out[B, D] = 1j * h1 * sad + 1j * h3 * (sdd - sbb) - 1j * h4 * sbc - 0.5 * gd * sbd
    out[C_, D] = 1j * h2 * sad - 1j * h3 * scb + 1j * h4 * (sdd - scc) - 0.5 * gd * scd

    out[B, A] = np.conj(out[A, B])
    out[C_, A] = np.conj(out[A, C_])
    out[D, A] = np.conj(out[A, D])
    out[C_, B] = np.conj(out[B, C_])
    out[D, B] = np.conj(out[B, D])
    out[D, C_] = np.conj(out[C_, D])


def axpy_into(out, s, a, k):
    out[:, :] = s + a * k


def rk4_combine_into(out, s, dt, k1, k2, k3, k4):
    out[:, :] = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_into(s, e1a, e1m, e1b, e3a, e3m, e3b, c2, c4, dt, dip, gam, out, k1, k2, k3, k4, tmp):
    """Classical RK4 with field values given at the three RK nodes (t, t+dt/2, t+dt)."""
    d1, d2, d3, d4 = dip[0], dip[1], dip[2], dip[3]
    gab, gac, gdb, gdc = gam[0], gam[1], gam[2], gam[3]

    rhs_into(s, 0.5 * d1 * e1a, 0.5 * d2 * c2[0], 0.5 * d3 * e3a, 0.5 * d4 * c4[0],
             gab, gac, gdb, gdc, k1)
    axpy_into(tmp, s, 0.5 * dt, k1)
    rhs_into(tmp, 0.5 * d1 * e1m, 0.5 * d2 * c2[1], 0.5 * d3 * e3m, 0.5 * d4 * c4[1],
             gab, gac, gdb, gdc, k2)
    axpy_into(tmp, s, 0.5 * dt, k2)
    rhs_into(tmp, 0.5 * d1 * e1m, 0.5 * d2 * c2[1], 0.5 * d3 * e3m, 0.5 * d4 * c4[1],
             gab, gac, gdb, gdc, k3)
    axpy_into(tmp, s, dt, k3)
    rhs_into(tmp, 0.5 * d1 * e1b, 0.5 * d2 * c2[2], 0.5 * d3 * e3b, 0.5 * d4 * c4[2],
             gab, gac, gdb, gdc, k4)
    rk4_combine_into(out, s, dt, k1, k2, k3, k4)


# --- numpy path --------------------------------------------------------------

def _np_rhs_all(sig, e1, e3, c2, c4, dip, gam, out):
    rhs_into(sig.transpose(1, 2, 0), 0.5 * dip[0] * e1, 0.5 * dip[1] * c2,
             0.5 * dip[2] * e3, 0.5 * dip[3] * c4, gam[0], gam[1], gam[2], gam[3],
             out.transpose(1, 2, 0))


def _np_rk4_all(sig, e1n, e3n, c2, c4, dt, dip, gam, out):
    nz = sig.shape[0]
    work = [np.empty((4, 4, nz), dtype=np.complex128) for _ in range(5)]
    rk4_into(sig.transpose(1, 2, 0), e1n[0], e1n[1], e1n[2], e3n[0], e3n[1], e3n[2],
             c2, c4, dt, dip, gam, out.transpose(1, 2, 0), *work)


def _np_propagate(sig, b1, b3, kappa1, kappa3, dz, e1, e3):
    # ∂ε/∂z = iκσ; i·σ_ab is real when σ_ab is imaginary, the rest is residual
    src1 = 1j * kappa1 * sig[:, A, B]
    src3 = 1j * kappa3 * sig[:, D, B]
    inc1 = 0.5 * dz * (src1[1:] + src1[:-1])
    inc3 = 0.5 * dz * (src3[1:] + src3[:-1])
    c1 = np.empty(sig.shape[0], dtype=np.complex128)
    c3 = np.empty(sig.shape[0], dtype=np.complex128)
    c1[0] = b1
    c3[0] = b3
    c1[1:] = b1 + np.cumsum(inc1)
    c3[1:] = b3 + np.cumsum(inc3)
    e1[:] = c1.real
    e3[:] = c3.real
    return max(np.abs(c1.imag).max(), np.abs(c3.imag).max())


def _phase_ratio(resid, e1, e3):
    scale = max(np.abs(e1).max(), np.abs(e3).max())
    if resid == 0.0:
        return 0.0
    return resid / scale if scale > 0 else np.inf


def _np_coupled_step(sig, e1, e3, c2, c4, b1, b3, dt, dz, kap1, kap3, dip, gam, out):
    """RK4 over the whole grid with the signal fields re-integrated at every stage.

    ``c2, c4, b1, b3`` hold control and boundary values at t, t + dt/2, t + dt.
    Returns the worst imaginary-residual / max|ε| ratio seen in the stages.
    """
    nz = sig.shape[0]
    k1, k2, k3, k4 = (np.empty_like(sig) for _ in range(4))
    es1 = np.empty(nz)
    es3 = np.empty(nz)
    worst = 0.0
    _np_rhs_all(sig, e1, e3, c2[0], c4[0], dip, gam, k1)
    stage = sig + (0.5 * dt) * k1
    r = _np_propagate(stage, b1[1], b3[1], kap1, kap3, dz, es1, es3)
    worst = max(worst, _phase_ratio(r, es1, es3))
    _np_rhs_all(stage, es1, es3, c2[1], c4[1], dip, gam, k2)
    stage = sig + (0.5 * dt) * k2
    r = _np_propagate(stage, b1[1], b3[1], kap1, kap3, dz, es1, es3)
    worst = max(worst, _phase_ratio(r, es1, es3))
    _np_rhs_all(stage, es1, es3, c2[1], c4[1], dip, gam, k3)
    stage = sig + dt * k3
    r = _np_propagate(stage, b1[2], b3[2], kap1, kap3, dz, es1, es3)
    worst = max(worst, _phase_ratio(r, es1, es3))
    _np_rhs_all(stage, es1, es3, c2[2], c4[2], dip, gam, k4)
    out[...] = sig + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return worst


def _np_finalize(old, new):
    """Re-Hermitize ``new`` in place; return (anti-Hermitian residual, max trace drift, first bad z)."""
    bad = ~np.isfinite(new).reshape(new.shape[0], -1).all(axis=1)
    first_bad = int(np.argmax(bad)) if bad.any() else -1
    herm = np.conj(new.transpose(0, 2, 1))
    resid = float(np.abs(new - herm).max())
    new[...] = 0.5 * (new + herm)
    tr_old = np.trace(old, axis1=1, axis2=2)
    tr_new = np.trace(new, axis1=1, axis2=2)
    drift = float(np.abs(tr_new - tr_old).max())
    return resid, drift, first_bad


NUMPY = SimpleNamespace(
    name="numpy",
    rhs_into=rhs_into,
    rhs_all=_np_rhs_all,
    rk4_all=_np_rk4_all,
    coupled_step=_np_coupled_step,
    propagate=_np_propagate,
    finalize=_np_finalize,
)


# --- numba path --------------------------------------------------------------

def _build_numba():
    from numba import njit

    rhs_nb = njit(cache=True, inline="always")(rhs_into)

    @njit(cache=True)
    def axpy_nb(out, s, a, k):
        for i in range(4):
            for j in range(4):
                out[i, j] = s[i, j] + a * k[i, j]

    @njit(cache=True)
    def combine_nb(out, s, dt, k1, k2, k3, k4):
        w = dt / 6.0
        for i in range(4):
            for j in range(4):
                out[i, j] = s[i, j] + w * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])

    # same rk4 source, resolved against the jitted helpers
    ns = {"__name__": __name__, "rhs_into": rhs_nb, "axpy_into": axpy_nb,
          "rk4_combine_into": combine_nb, "np": np}
    rk4_nb = njit(cache=True)(FunctionType(rk4_into.__code__, ns, "rk4_into"))

    @njit(cache=True)
    def rhs_all(sig, e1, e3, c2, c4, dip, gam, out):
        h2 = 0.5 * dip[1] * c2
        h4 = 0.5 * dip[3] * c4
        for k in range(sig.shape[0]):
            rhs_nb(sig[k], 0.5 * dip[0] * e1[k], h2, 0.5 * dip[2] * e3[k], h4,
                   gam[0], gam[1], gam[2], gam[3], out[k])

    @njit(cache=True)
    def rk4_all(sig, e1n, e3n, c2, c4, dt, dip, gam, out):
        k1 = np.empty((4, 4), dtype=np.complex128)
        k2 = np.empty_like(k1)
        k3 = np.empty_like(k1)
        k4 = np.empty_like(k1)
        tmp = np.empty_like(k1)
        for k in range(sig.shape[0]):
            rk4_nb(sig[k], e1n[0, k], e1n[1, k], e1n[2, k], e3n[0, k], e3n[1, k], e3n[2, k],
                   c2, c4, dt, dip, gam, out[k], k1, k2, k3, k4, tmp)

    @njit(cache=True)
    def propagate(sig, b1, b3, kappa1, kappa3, dz, e1, e3):
        nz = sig.shape[0]
        c1 = complex(b1)
        c3 = complex(b3)
        e1[0] = b1
        e3[0] = b3
        resid = 0.0
        p1 = 1j * kappa1 * sig[0, 0, 1]
        p3 = 1j * kappa3 * sig[0, 3, 1]
        for k in range(1, nz):
            q1 = 1j * kappa1 * sig[k, 0, 1]
            q3 = 1j * kappa3 * sig[k, 3, 1]
            c1 += 0.5 * dz * (p1 + q1)
            c3 += 0.5 * dz * (p3 + q3)
            e1[k] = c1.real
            e3[k] = c3.real
            resid = max(resid, abs(c1.imag), abs(c3.imag))
            p1 = q1
            p3 = q3
        return resid

    @njit(cache=True)
    def finalize(old, new):
        resid2 = 0.0
        drift = 0.0
        first_bad = -1
        for k in range(new.shape[0]):
            tr_old = 0.0
            tr_new = 0.0
            for i in range(4):
                tr_old += old[k, i, i].real
                for j in range(i, 4):
                    v = new[k, i, j]
                    w = new[k, j, i]
                    if first_bad < 0 and not (np.isfinite(v.real) and np.isfinite(v.imag)
                                              and np.isfinite(w.real) and np.isfinite(w.imag)):
                        first_bad = k
                    dr = v.real - w.real
                    di = v.imag + w.imag
                    r2 = dr * dr + di * di
                    if r2 > resid2:
                        resid2 = r2
                    mr = 0.5 * (v.real + w.real)
                    mi = 0.5 * (v.imag - w.imag)
                    new[k, i, j] = complex(mr, mi)
                    new[k, j, i] = complex(mr, -mi)
                tr_new += new[k, i, i].real
            dd = abs(tr_new - tr_old)
            if dd > drift:
                drift = dd
        return np.sqrt(resid2), drift, first_bad

    @njit(cache=True)
    def axpy3(out, s, a, k):
        for z in range(s.shape[0]):
            for i in range(4):
                for j in range(4):
                    out[z, i, j] = s[z, i, j] + a * k[z, i, j]

    @njit(cache=True)
    def phase_ratio(resid, e1, e3):
        if resid == 0.0:
            return 0.0
        scale = max(np.abs(e1).max(), np.abs(e3).max())
        return resid / scale if scale > 0 else np.inf

    @njit(cache=True)
    def coupled_step(sig, e1, e3, c2, c4, b1, b3, dt, dz, kap1, kap3, dip, gam, out):
        nz = sig.shape[0]
        k1 = np.empty_like(sig)
        k2 = np.empty_like(sig)
        k3 = np.empty_like(sig)
        k4 = np.empty_like(sig)
        stage = np.empty_like(sig)
        es1 = np.empty(nz)
        es3 = np.empty(nz)
        worst = 0.0
        rhs_all(sig, e1, e3, c2[0], c4[0], dip, gam, k1)
        axpy3(stage, sig, 0.5 * dt, k1)
        r = propagate(stage, b1[1], b3[1], kap1, kap3, dz, es1, es3)
        worst = max(worst, phase_ratio(r, es1, es3))
        rhs_all(stage, es1, es3, c2[1], c4[1], dip, gam, k2)
        axpy3(stage, sig, 0.5 * dt, k2)
        r = propagate(stage, b1[1], b3[1], kap1, kap3, dz, es1, es3)
        worst = max(worst, phase_ratio(r, es1, es3))
        rhs_all(stage, es1, es3, c2[1], c4[1], dip, gam, k3)
        axpy3(stage, sig, dt, k3)
        r = propagate(stage, b1[2], b3[2], kap1, kap3, dz, es1, es3)
        worst = max(worst, phase_ratio(r, es1, es3))
        rhs_all(stage, es1, es3, c2[2], c4[2], dip, gam, k4)
        w = dt / 6.0
        for z in range(nz):
            for i in range(4):
                for j in range(4):
                    out[z, i, j] = sig[z, i, j] + w * (
                        k1[z, i, j] + 2.0 * k2[z, i, j] + 2.0 * k3[z, i, j] + k4[z, i, j])
        return worst

    return SimpleNamespace(
        name="numba",
        rhs_into=rhs_nb,
        rhs_all=rhs_all,
        rk4_all=rk4_all,
        coupled_step=coupled_step,
        propagate=propagate,
        finalize=finalize,
    )


_NUMBA = None


def get_backend(name: str | None = None):
    """Return the kernel namespace for ``name`` (default: environment choice)."""
    global _NUMBA
    if name is None:
        name = os.environ.get("LAMBDA_STORE_BACKEND", "numba").strip().lower()
    if name == "numpy":
        return NUMPY
    if name != "numba":
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if _NUMBA is None:
        try:
            _NUMBA = _build_numba()
        except ImportError:
            return NUMPY
    return _NUMBA
