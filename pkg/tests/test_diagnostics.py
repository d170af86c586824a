import math

import mpmath
import numpy as np
import pytest

from lambda_store.diagnostics import (
    Peak,
    adiabatic_sigma_bc,
    detect_peaks,
    dressed_eigenvalues,
    interaction_matrix,
    nonadiabatic_mismatch,
    polariton_psi,
    polariton_sample,
    polariton_velocity,
    shifted_overlap,
)
from lambda_store.errors import AdiabaticRelationError, NoStoredCoherenceError
from lambda_store.model import C, EPS0, HBAR, paper_medium

M = paper_medium()
G = 2 * M.N * HBAR * M.omega1 / EPS0


def test_adiabatic_examples():
    assert adiabatic_sigma_bc(0.0, 1e-9, 2.0, 3.0) == 0.0
    assert adiabatic_sigma_bc(3.0, 2.0, 2.0, 3.0) == -1.0
    assert adiabatic_sigma_bc(1e-10, 1.2e-9, 2.5, 2.5) == pytest.approx(-1 / 12, rel=1e-12)


def test_adiabatic_zero_control():
    with pytest.raises(AdiabaticRelationError, match="inapplicable"):
        adiabatic_sigma_bc(1e-10, 0.0, 1.0, 1.0)


def test_psi_trivial_cases():
    assert polariton_psi(0, 0, 0, 0, 0, M) == 0
    s = 1e-3
    assert polariton_psi(0, 0, 0, 0, s, M) == pytest.approx(-math.sqrt(G) * s, rel=1e-14)


def test_psi_against_mpmath():
    mpmath.mp.dps = 50
    e1, e2 = mpmath.mpf("1e-10"), mpmath.mpf("1.2e-9")
    d1, d2 = mpmath.mpf(M.d1), mpmath.mpf(M.d2)
    s = -e1 * d1 / (e2 * d2)
    g = 2 * mpmath.mpf(M.N) * mpmath.mpf(M.omega1) * 4 * mpmath.pi
    num = (d2 * e2 / d1) * e1 - g * s
    den = mpmath.sqrt((d2 / d1) ** 2 * e2**2 + g)
    ours = polariton_psi(1e-10, 0.0, 1.2e-9, 0.0, float(s), M)
    assert ours == pytest.approx(float(num / den), rel=1e-12)


def test_psi_homogeneous_degree_one():
    args = (1e-10, 3e-11, -2e-3)
    a = polariton_psi(args[0], args[1], 1.2e-9, 8e-10, args[2], M)
    b = polariton_psi(2.5 * args[0], 2.5 * args[1], 1.2e-9, 8e-10, 2.5 * args[2], M)
    assert b == pytest.approx(2.5 * a, rel=1e-13)


def test_velocity_limits():
    assert polariton_velocity(0.0, 0.0, M) == 0.0
    assert polariton_velocity(1.0, 0.0, M) / C == pytest.approx(1.0, abs=1e-10)
    assert polariton_velocity(0.0, 1.0, M) < C


def test_velocity_reference_value_against_mpmath():
    mpmath.mp.dps = 40
    w2 = (mpmath.mpf(M.d2) / mpmath.mpf(M.d1)) ** 2 * mpmath.mpf("1.2e-9") ** 2
    g = 2 * mpmath.mpf(M.N) * mpmath.mpf(M.omega1) * 4 * mpmath.pi
    ref = w2 / (w2 + g)
    v = polariton_velocity(1.2e-9, 0.0, M)
    assert v / C == pytest.approx(float(ref), rel=1e-12)
    assert v / C == pytest.approx(3.73e-6, rel=0.01)
    assert M.L / v == pytest.approx(5.87e10, rel=0.01)


def test_velocity_monotone():
    e = np.linspace(0, 5e-9, 200)
    assert np.all(np.diff(polariton_velocity(e, 0.0, M)) > 0)
    assert np.all(np.diff(polariton_velocity(1e-9, e, M)) > 0)


def test_mismatch_examples():
    e3, e4 = 2e-11, 1.2e-9
    s = adiabatic_sigma_bc(e3, e4, M.d3, M.d4)
    ratio, corrected = nonadiabatic_mismatch(0.0, e3, 0.0, e4, s, M)
    assert ratio == pytest.approx(1.0, rel=1e-15)
    scaled = s * math.sqrt(M.omega3 / M.omega1)
    ratio, corrected = nonadiabatic_mismatch(0.0, e3, 0.0, e4, scaled, M)
    assert corrected == pytest.approx(1.0, rel=1e-14)


def test_mismatch_single_channel_branch():
    s = adiabatic_sigma_bc(1e-10, 1.2e-9, M.d1, M.d2)
    assert nonadiabatic_mismatch(1e-10, 0.0, 1.2e-9, 0.0, s, M) == pytest.approx((1.0, 1.0))


def test_mismatch_errors():
    with pytest.raises(NoStoredCoherenceError):
        nonadiabatic_mismatch(0.0, 1e-11, 0.0, 1e-9, 1e-16, M)
    with pytest.raises(AdiabaticRelationError):
        nonadiabatic_mismatch(0.0, 1e-11, 0.0, 0.0, 1e-3, M)


def test_polariton_sample_fields():
    s = polariton_sample(1e-10, 0.0, 1.2e-9, 0.0, -0.05, M)
    assert 0 <= s.v <= C
    assert math.isnan(s.sigma_bc_from_34) and math.isnan(s.mismatch)
    assert s.sigma_bc_from_12 == pytest.approx(adiabatic_sigma_bc(1e-10, 1.2e-9, M.d1, M.d2))


def test_dressed_zero_fields():
    assert np.all(dressed_eigenvalues(0, 0, 0, 0, M) == 0)


def charpoly_roots(e1, e2, e3, e4):
    # bipartite 4x4: λ⁴ − (Σh²) λ² + (h₁h₄ − h₂h₃)², h_j = d_j ε_j / 2
    h1, h2, h3, h4 = (0.5 * d * e for d, e in zip(M.dipoles, (e1, e2, e3, e4)))
    s = h1**2 + h2**2 + h3**2 + h4**2
    p = (h1 * h4 - h2 * h3) ** 2
    disc = math.sqrt(max(s * s - 4 * p, 0.0))
    lam2 = sorted([(s - disc) / 2, (s + disc) / 2])
    r = [math.sqrt(max(x, 0.0)) for x in lam2]
    return np.array([-r[1], -r[0], r[0], r[1]])


def test_dressed_matches_characteristic_polynomial():
    rng = np.random.default_rng(5)
    for _ in range(200):
        e = rng.uniform(-1, 1, 4) * 1e-9
        lam = dressed_eigenvalues(*e, M)
        assert np.allclose(lam, charpoly_roots(*e), rtol=0, atol=1e-12 * np.abs(lam).max())


def test_dressed_dark_condition_both_directions():
    e1, e2, e3 = 1e-10, 1.2e-9, 3e-11
    e4 = e2 * M.d2 * e3 * M.d3 / (e1 * M.d1 * M.d4)
    lam = dressed_eigenvalues(e1, e2, e3, e4, M)
    assert np.sort(np.abs(lam))[1] < 1e-12 * np.abs(lam).max()
    lam = dressed_eigenvalues(e1, e2, e3, 1.1 * e4, M)
    assert np.sort(np.abs(lam))[0] > 1e-6 * np.abs(lam).max()


def test_interaction_matrix_layout():
    H = interaction_matrix(1.0, 2.0, 3.0, 4.0, M)
    assert H[0, 1] == H[1, 0] == -0.5 * M.d1
    assert H[0, 2] == -M.d2
    assert H[3, 1] == -1.5 * M.d3
    assert H[3, 2] == -2.0 * M.d4
    assert np.all(np.diag(H) == 0)


def test_peaks_monotone_series():
    t = np.linspace(0, 1, 50)
    assert detect_peaks(t, t, 0.0) == []


def test_peaks_sin2_pulse():
    w, h = 1e11, 1e-10
    dt = 2e8
    t = np.arange(-1e10, 1.2e11, dt)
    y = h * np.where((t >= 0) & (t <= w), np.sin(np.pi * t / w) ** 2, 0.0)
    (p,) = detect_peaks(t, y, 0.1 * h)
    assert p.height == pytest.approx(h, rel=1e-4)
    assert p.t_center == pytest.approx(w / 2, abs=dt)
    assert p.width_fwhm == pytest.approx(w / 2, rel=1e-3)


def test_peaks_two_gaussians():
    dt = 0.01
    t = np.arange(0, 10, dt)
    y = np.exp(-((t - 3.003) ** 2) / 0.1) + 0.5 * np.exp(-((t - 7.2) ** 2) / 0.2)
    p1, p2 = detect_peaks(t, y, 0.1)
    assert p1.t_center == pytest.approx(3.003, abs=dt)
    assert p2.t_center == pytest.approx(7.2, abs=dt)
    assert p2.height == pytest.approx(0.5, rel=1e-3)
    assert p1.width_fwhm == pytest.approx(2 * math.sqrt(0.1 * math.log(2)), rel=1e-3)


def test_peaks_prominence_filters_ripple():
    t = np.linspace(0, 1, 1001)
    y = np.exp(-((t - 0.5) ** 2) / 0.01) + 0.05 * np.sin(150 * t)
    assert len(detect_peaks(t, y, 0.1)) > 1
    assert len(detect_peaks(t, y, 0.1, min_prominence=0.3)) == 1


def test_peaks_input_validation():
    with pytest.raises(ValueError, match="empty"):
        detect_peaks([], [], 0.0)
    with pytest.raises(ValueError, match="time-ordered"):
        detect_peaks([0, 2, 1], [0, 1, 0], 0.0)


def test_peak_invariants():
    with pytest.raises(ValueError):
        Peak(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        Peak(0.0, 1.0, -1.0)


def test_shifted_overlap():
    z = np.linspace(0, 10, 401)
    a = np.exp(-((z - 3) ** 2))
    b = np.exp(-((z - 5) ** 2))
    assert shifted_overlap(z, a, b, 2.0) == pytest.approx(1.0, abs=1e-6)
    assert shifted_overlap(z, a, b, 0.0) < 0.2
