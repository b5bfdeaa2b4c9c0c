import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gapverify.eigen import richardson
from gapverify.model1d import (Model1D, check_psi_ode, check_psi_pde, hbar, kbar,
                               kbar_derivs, log_hbar_derivs, psi_parabolic)

UNIT = Model1D(1.0)


def test_kbar_normalization_point():
    assert kbar(0.0, 1 / (4 * math.pi)) == pytest.approx(1.0, rel=1e-15)


def test_kbar_mass():
    mass, _ = quad(lambda s: kbar(s, 0.3), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert abs(mass - 1) <= 1e-10


def test_kbar_solves_heat_equation():
    s = np.linspace(-3, 3, 201)
    for t in (0.01, 0.2, 2.0):
        K, Ks, Kss, Kt = kbar_derivs(s, t)
        assert np.max(np.abs(Kt - Kss)) <= 1e-8
        # independent check of the analytic s-derivative by central differences
        d = 1e-5
        fd = (kbar(s + d, t) - kbar(s - d, t)) / (2 * d)
        assert np.max(np.abs(fd - Ks)) <= 1e-6 * np.max(np.abs(Ks))


def test_series_matches_images():
    s = np.linspace(-0.45, 0.45, 91)
    worst = 0.0
    for t in np.geomspace(1e-3, 1.0, 25):
        a = hbar(s, t, UNIT, "series")
        b = hbar(s, t, UNIT, "images")
        worst = max(worst, np.max(np.abs(a - b)))
    assert worst <= 1e-10


def test_large_time_leading_mode():
    s = np.linspace(-0.45, 0.45, 91)
    t = 3.0
    v = math.exp(UNIT.mu0 * t) * hbar(s, t, UNIT, "series")
    np.testing.assert_allclose(v, 2 * np.cos(math.pi * s), atol=1e-8)


def test_boundary_vanishing():
    t = 0.1
    centre = hbar(0.0, t, UNIT)
    for edge in (0.5 - 1e-6, -0.5 + 1e-6):
        assert 0 < hbar(edge, t, UNIT) <= 1e-5 * centre


def test_hbar_even_and_decreasing():
    s = np.linspace(0, 0.49, 200)
    for t in (0.005, 0.05, 0.5):
        h = hbar(s, t, UNIT)
        np.testing.assert_allclose(hbar(-s, t, UNIT), h, rtol=1e-13)
        assert np.all(np.diff(h) < 0)


def test_log_hbar_concave():
    s = np.linspace(-0.49, 0.49, 400)
    for t in (0.002, 0.02, 0.2, 1.0):
        logH = log_hbar_derivs(s, t, UNIT)[0]
        assert np.max(np.diff(logH, 2)) <= 1e-8
        logHK = logH + s * s / (4 * t)
        assert np.max(np.diff(logHK, 2)) <= 1e-8


def test_psi_parabolic_at_origin():
    for t in (1e-3, 0.03, 0.3, 3.0):
        assert psi_parabolic(0.0, t, UNIT) == 0.0


def test_psi_parabolic_decreasing():
    s = np.linspace(1e-3, 0.45, 200)
    for t in (0.01, 0.1, 1.0):
        assert np.all(psi_parabolic(s, t, UNIT, deriv=1) < 0)


def test_psi_parabolic_large_time_limit():
    model = Model1D(1.0, k_max=500)
    s = np.linspace(0, 0.4, 81)
    t = 3.0
    limit = -math.pi * np.tan(math.pi * s) + s / (2 * t)
    assert np.max(np.abs(psi_parabolic(s, t, model) - limit)) <= 1e-6


def test_psi_ode_identity():
    s = np.linspace(0, 0.49, 1000)
    assert check_psi_ode(UNIT, s) <= 1e-9
    assert check_psi_ode(UNIT, s, scale=0.5) <= 1e-9
    assert UNIT.psi(0.0) == 0.0 and UNIT.psi(0.0, 2) == 0.0


def test_psi_pde_condition_holds():
    s = np.linspace(0.01, 0.45, 45)
    t = np.geomspace(0.01, 1.0, 15)
    res = check_psi_pde(UNIT, s, t)
    assert res.minimum >= -1e-6
    coarse = check_psi_pde(Model1D(1.0, k_max=100), s, t)
    np.testing.assert_allclose(coarse.field, res.field, atol=1e-8)


def test_psi_pde_free_kernel_identity():
    res = check_psi_pde(UNIT, np.linspace(0.01, 0.45, 10), [0.1, 1.0], kernel="free")
    assert res.minimum == 0.0 and res.maximum == 0.0


def test_psi_pde_large_time_matches_elliptic():
    res = check_psi_pde(UNIT, np.linspace(0.01, 0.45, 45), [10.0])
    assert max(abs(res.minimum), abs(res.maximum)) <= 1e-4


def test_model_constants():
    m = Model1D(1.7)
    assert m.mu1 - m.mu0 == pytest.approx(3 * math.pi ** 2 / 1.7 ** 2, rel=1e-15)
    s = np.linspace(-0.849, 0.849, 301)
    np.testing.assert_allclose(m.wbar(s), m.phi1(s) / m.phi0(s), rtol=1e-12, atol=1e-15)


def test_model_eigenfunctions_satisfy_ode():
    m = Model1D(1.3)
    s = np.linspace(-0.6, 0.6, 101)
    d = 1e-4
    for f, mu in ((m.phi0, m.mu0), (m.phi1, m.mu1)):
        fd2 = (f(s + d) - 2 * f(s) + f(s - d)) / d ** 2
        np.testing.assert_allclose(fd2, -mu * f(s), atol=1e-5 * mu)


def test_eigen_solver_recovers_model_values(interval_512, interval_1024):
    for i, mu in ((0, UNIT.mu0), (1, UNIT.mu1)):
        ext = richardson(interval_512.eigenvalues[i], interval_1024.eigenvalues[i])
        assert ext == pytest.approx(mu, rel=1e-10)


def test_tan_guard():
    with pytest.raises(ValueError):
        UNIT.psi(0.4995)


@settings(max_examples=25, deadline=None)
@given(D=st.floats(0.3, 5.0), u=st.floats(-0.45, 0.45), tau=st.floats(0.002, 1.0))
def test_hbar_diameter_scaling(D, u, tau):
    m = Model1D(D)
    lhs = hbar(u * D, tau * D ** 2, m)
    rhs = hbar(u, tau, UNIT) / D
    assert lhs == pytest.approx(rhs, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(D=st.floats(0.2, 10.0))
def test_psi_ode_any_diameter(D):
    m = Model1D(D)
    s = np.linspace(0, 0.45 * D, 50)
    # residual scales like D^-3; normalize to the unit interval
    assert check_psi_ode(m, s) * D ** 3 <= 1e-9
