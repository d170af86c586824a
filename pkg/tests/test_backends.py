import numpy as np
import pytest

from conftest import reduced_config
from lambda_store._kernels import NUMPY, get_backend
from lambda_store.bloch import LocalFields, liouville_rhs
from lambda_store.field import MediumState, WindowStepper
from lambda_store.scenario import run_scenario

numba = pytest.importorskip("numba")


def test_environment_flag_selects_backend(monkeypatch):
    monkeypatch.setenv("LAMBDA_STORE_BACKEND", "numpy")
    assert get_backend() is NUMPY
    monkeypatch.setenv("LAMBDA_STORE_BACKEND", "numba")
    assert get_backend().name == "numba"
    with pytest.raises(ValueError):
        get_backend("fortran")


def _random_state(rng, nz):
    a = rng.normal(size=(nz, 4, 4)) + 1j * rng.normal(size=(nz, 4, 4))
    rho = a @ np.conj(np.swapaxes(a, -1, -2))
    return rho / np.trace(rho, axis1=1, axis2=2)[:, None, None]


@pytest.mark.parametrize("name", ["rhs_all", "coupled_step"])
def test_kernels_agree(name):
    cfg = reduced_config()
    rng = np.random.default_rng(7)
    nz = cfg.grid.nz
    sig = _random_state(rng, nz)
    dip = np.array(cfg.medium.dipoles)
    gam = np.full(4, 2.4e-9)
    e1, e3 = rng.normal(size=nz) * 1e-10, rng.normal(size=nz) * 1e-10
    outs = []
    for kern in (NUMPY, get_backend("numba")):
        out = np.empty_like(sig)
        if name == "rhs_all":
            kern.rhs_all(sig, e1, e3, 1e-9, 2e-9, dip, gam, out)
        else:
            c = np.array([1e-9, 1.1e-9, 1.2e-9])
            kern.coupled_step(sig, e1, e3, c, c, np.zeros(3), np.zeros(3), 2e7, cfg.grid.dz,
                              cfg.medium.kappa1, cfg.medium.kappa3, dip, gam, out)
        outs.append(out)
    assert np.allclose(outs[0], outs[1], rtol=0, atol=1e-15 * np.abs(outs[0]).max())


def test_liouville_matches_kernel():
    cfg = reduced_config()
    rng = np.random.default_rng(8)
    sig = _random_state(rng, 5)
    f = LocalFields(*(rng.normal(size=4) * 1e-9))
    out = np.empty_like(sig)
    NUMPY.rhs_all(sig, np.full(5, f.eps1), np.full(5, f.eps3), f.eps2, f.eps4,
                  np.array(cfg.medium.dipoles), np.full(4, cfg.medium.decays.gamma_ab), out)
    assert np.allclose(liouville_rhs(sig, f, cfg.medium), out, rtol=1e-14, atol=0)


def test_full_runs_agree():
    cfg = reduced_config()
    a = run_scenario(cfg, backend="numba")
    b = run_scenario(cfg, backend="numpy")
    x, y = a.exit_series[:, 1:3], b.exit_series[:, 1:3]
    assert np.abs(x - y).max() <= 1e-12 * np.abs(x).max()


def test_finalize_agrees():
    rng = np.random.default_rng(9)
    old = _random_state(rng, 11)
    new = old + 1e-9 * rng.normal(size=old.shape)
    res = []
    for kern in (NUMPY, get_backend("numba")):
        arr = new.copy()
        res.append((kern.finalize(old, arr), arr))
    (h0, d0, b0), a0 = res[0]
    (h1, d1, b1), a1 = res[1]
    assert b0 == b1 == -1
    assert h0 == pytest.approx(h1, rel=1e-12) and d0 == pytest.approx(d1, rel=1e-6)
    assert np.allclose(a0, a1, rtol=0, atol=1e-17)
    bad = new.copy()
    bad[4, 0, 0] = np.nan
    assert get_backend("numba").finalize(old, bad)[2] == 4
    assert NUMPY.finalize(old, new.copy())[2] == -1


def test_stepper_uses_requested_backend():
    cfg = reduced_config()
    st = WindowStepper(cfg.grid, cfg.medium, cfg.schedule, backend="numpy")
    assert st.kern is NUMPY
    sig = MediumState.ground(cfg.grid.nz).states
    e1, e3 = st.initial_fields(sig)
    assert e1[0] == pytest.approx(0.0, abs=1e-30)
