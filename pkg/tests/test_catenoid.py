from __future__ import annotations

import numpy as np
import pytest

from fbannuli.catenoid import (
    F_of_s,
    G_function,
    arclength_map,
    fb_ball,
    h_poly,
    hat_p,
    orth_radius,
    orth_radius_from_ab,
    profile,
    rotational_psi,
    s_tilde,
    s_tilde_euclidean,
    u_tilde,
    u_tilde_euclidean,
    x3_by_quadrature,
)
from fbannuli.immersion import SurfaceSolver
from fbannuli.spaceform import manifold_residual, metric_inner
from fbannuli.wente_ode import ParamTriple, integrate_alphabeta

U_TILDE_0 = 2.399357280515468  # root of G, frozen
S_TILDE_0 = 3.01775912307664  # root of arcsinh(s/2) = sqrt(s^2+4)/s, frozen


@pytest.mark.parametrize("k", [-0.2, -0.1, 0.0, 0.1, 0.2])
def test_profile_invariants(k):
    prof = profile(k)
    s = np.linspace(-8, 8, 161)
    x, xp, x3, x4 = prof(s)
    assert np.max(np.abs(xp**2 - h_poly(x, k) / x**2)) < 1e-9
    assert np.max(np.abs(manifold_residual(prof.point(s), k))) < 1e-9
    assert x[80] == pytest.approx(2 / np.sqrt(4 * k + 1))


def test_profile_euclidean():
    prof = profile(0.0)
    s = np.linspace(0, 6, 31)
    x, _, x3, x4 = prof(s)
    assert np.max(np.abs(x - np.sqrt(s * s + 4))) < 1e-8
    assert np.max(np.abs(x3 - 2 * np.arcsinh(s / 2))) < 1e-8
    assert np.max(np.abs(x4 - 1)) < 1e-12


def test_profile_shapes():
    x = profile(0.1)(np.linspace(0, 12, 400))[0]
    assert np.any(np.diff(x) < 0) and np.any(np.diff(x) > 0)
    x = profile(-0.1)(np.linspace(0, 12, 400))[0]
    assert np.all(np.diff(x) > 0)


def test_F_examples():
    for k in (-0.2, 0.0, 0.2):
        assert F_of_s(profile(k), 0.0)[0] < 0
    prof = profile(0.0)
    s = np.linspace(0.1, 5, 20)
    # the correctly derived kappa = 0 form ends in -2, not -1
    assert np.max(np.abs(F_of_s(prof, s)[0] - (2 * np.arcsinh(s / 2) * s / np.sqrt(s * s + 4) - 2))) < 1e-8
    for k in (-0.15, 0.1):
        prof = profile(k)
        s = np.linspace(0.2, 5, 9)
        h = 1e-5
        fd = (F_of_s(prof, s + h)[0] - F_of_s(prof, s - h)[0]) / (2 * h)
        assert np.max(np.abs(fd - F_of_s(prof, s)[1]) / np.abs(fd)) < 1e-6


def test_s_tilde():
    assert s_tilde(0.0) == pytest.approx(S_TILDE_0, abs=1e-10)
    assert s_tilde_euclidean() == pytest.approx(S_TILDE_0, abs=1e-12)
    ks = np.linspace(-0.2, 0.2, 21)
    st = np.array([s_tilde(k) for k in ks])
    assert np.all(np.diff(st) < 0)
    mid = np.array([s_tilde(k) for k in 0.5 * (ks[1:] + ks[:-1])])
    assert np.all((mid < st[:-1]) & (mid > st[1:]))
    for k in (-0.2, 0.0, 0.15):
        prof = profile(k)
        sv = s_tilde(k, prof)
        assert F_of_s(prof, sv)[1] > 0
        grid = np.linspace(1e-3, sv, 200)
        assert np.all(prof(grid)[1] > 0)
        assert np.all(prof.derivative(np.concatenate([-grid, grid]))[2] > 0)
        if k != 0:
            assert np.all(k * prof.derivative(grid)[3] < 0)


def test_s_tilde_before_maximum():
    prof = profile(0.1)
    s = np.linspace(0, 12, 12001)
    s1 = s[np.argmax(prof(s)[0])]
    assert s_tilde(0.1, prof) < s1


def test_u_tilde():
    assert u_tilde_euclidean() == pytest.approx(U_TILDE_0, abs=1e-12)
    assert u_tilde(0.0) == pytest.approx(U_TILDE_0, abs=1e-9)
    assert 2 * np.sinh(U_TILDE_0 / 2) == pytest.approx(S_TILDE_0, abs=1e-8)
    vals = [u_tilde(-0.1, b) for b in (1.0, 1.5, 2.0)]
    assert np.ptp(vals) < 1e-9


def test_G_increasing():
    u = np.linspace(0.1, 8, 300)
    assert np.all(np.diff(G_function(u)) > 0)


def test_fb_ball():
    b = fb_ball(0.0)
    prof = profile(0.0)
    x, _, x3, _ = prof(b.s_tilde)
    assert b.radius == pytest.approx(np.hypot(x, x3))
    b = fb_ball(-0.1)
    prof = profile(-0.1)
    s = np.linspace(-b.s_tilde, b.s_tilde, 81)
    th = np.linspace(0, 2 * np.pi, 9)
    x, _, x3, x4 = prof(s)
    pts = np.stack([np.outer(x, np.cos(th)), np.outer(x, np.sin(th)), np.outer(x3, np.ones_like(th)),
                    np.outer(x4, np.ones_like(th))], axis=-1)
    lev = metric_inner(pts, np.array([0, 0, 0, 1.0]), -0.1)
    assert np.all(lev >= b.level - 1e-8)
    assert np.abs(lev[[0, -1]] - b.level).max() < 1e-8
    assert np.all(b.margin(pts) > -1e-8)
    half = lev[40:, 0]
    assert np.all(np.diff(half) < 0)  # kappa < 0: <x, e4> / kappa decreasing means x4 increasing


def test_orth_radius():
    uh = 2 * np.arcsinh(2)
    R, c = orth_radius(uh)
    assert R == pytest.approx(5.0, abs=1e-13)
    assert c[2] == pytest.approx(2 * np.arcsinh(2) - np.sqrt(5), abs=1e-13)
    us = 2 * np.arcsinh(1)
    h = 1e-4
    assert orth_radius(us - h)[0] > orth_radius(us)[0] < orth_radius(us + h)[0]
    for b in (1.0, 1.6):
        traj = integrate_alphabeta(ParamTriple(1, b, 0), 3.0, 1e-12)
        for u in (0.5, 1.5, 2.5):
            al, be = traj(u)[:2]
            assert orth_radius_from_ab(u, al, be) == pytest.approx(orth_radius(u)[0], abs=1e-8)


def test_hat_p():
    for k in (-0.15, 0.0, 0.1):
        prof = profile(k)
        ut = u_tilde(k)
        assert abs(hat_p(prof, ut)[2]) < 1e-8
        assert hat_p(prof, ut + 0.05)[2] > 0 > hat_p(prof, ut - 0.05)[2]
    prof = profile(0.0)
    uh = 2 * np.arcsinh(2)
    assert np.allclose(hat_p(prof, uh), orth_radius(uh)[1], atol=1e-8)


def test_x3_quadrature_cross_check():
    for k in (-0.1, 0.1):
        prof = profile(k)
        for s in (0.5, 1.5, 2.5):
            assert x3_by_quadrature(prof, s) == pytest.approx(float(prof(s)[2]), abs=1e-8)


@pytest.mark.parametrize("k", [-0.1, 0.0, 0.1])
def test_rotational_psi_matches_frames(k):
    solver = SurfaceSolver(ParamTriple(1.0, 1.0, k), u_max=2.0, tol=1e-12, recentered=True)
    u = np.linspace(-1.8, 1.8, 7)
    v = np.linspace(0, 2 * solver.sigma, 5)
    g = solver.grid(u, v)
    ref = rotational_psi(k, u[:, None], v[None, :])
    assert np.max(np.abs(g["psi"] - ref)) < 1e-6


def test_arclength_map_euclidean():
    sm = arclength_map(0.0)
    u = np.linspace(-3, 3, 13)
    assert np.max(np.abs(sm(u) - 2 * np.sinh(u / 2))) < 1e-10
