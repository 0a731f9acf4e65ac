from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from fbannuli.catenoid import hat_p, profile, u_tilde
from fbannuli.fbsearch import (
    CertificateRefused,
    G_map,
    J_interval,
    LevelCurvePoint,
    QOutsideJ,
    assemble_annulus,
    candidate_rationals,
    export_h3,
    f_hat,
    find_b0,
    g_kappa,
    g_tilde,
    height_map,
    kappa_star,
    write_obj,
)
from fbannuli.hamilton import tau_info
from fbannuli.period import b_level
from fbannuli.wente_ode import ParamTriple

B0 = 1.2531581545235664  # frozen from find_b0
KAPPA_STAR_35 = -0.20976776759296256  # frozen kappa*(-3/5) from the mu curve at step 0.01


def test_f_hat_signs():
    assert f_hat(1.0, 0.0) > 0
    assert f_hat(1.99, 0.0) < 0


def test_find_b0():
    r = find_b0()
    assert 1 < r.b0 < 2 and abs(r.residual) < 1e-8
    assert r.b0 == pytest.approx(B0, abs=1e-9)
    assert f_hat(r.b0 - 0.05, 0.0) > 0 > f_hat(r.b0 + 0.05, 0.0)


def test_mu_curve(mu_data):
    mu, status = mu_data
    assert mu[0].kappa == 0.0 and mu[0].b == pytest.approx(B0, abs=1e-9)
    assert all(abs(f_hat(p.b, p.kappa)) < 1e-8 for p in mu[::5])
    assert min(p.kappa for p in mu) < -0.2
    th = [p.theta for p in mu]
    assert max(th) - min(th) > 0.05
    for p in mu[::6]:
        assert f_hat(p.b - 1e-3, p.kappa) > 0 > f_hat(p.b + 1e-3, p.kappa)
    for p in mu[::4]:
        if p.kappa < 0:
            assert abs(height_map(p.params())) < 1e-7


def test_J_and_candidates(mu_data):
    J = J_interval(mu_data[0])
    assert -1 / np.sqrt(2) < J[0] < J[1] < -1 / np.sqrt(3)
    assert candidate_rationals(J) == [Fraction(-3, 5)]


def test_height_matches_hat_p_at_a1():
    k, b = -0.1, 1.2
    p = ParamTriple(1.0, b, k)
    h = height_map(p)
    t = tau_info(p).tau
    assert abs(h - hat_p(profile(k), t)[2]) < 1e-7
    assert np.sign(h) == np.sign(t - u_tilde(k))


def test_kappa_star(mu_data):
    ks = kappa_star("-3/5", mu_data[0])
    assert ks == pytest.approx(KAPPA_STAR_35, abs=1e-9)
    assert abs(g_kappa(-0.6, ks)) < 1e-8
    assert abs(g_tilde(-0.6, ks)) < 1e-7
    assert np.sign(g_tilde(-0.6, ks - 5e-3)) != np.sign(g_tilde(-0.6, ks + 5e-3))
    assert np.sign(g_kappa(-0.6, ks - 5e-3)) == np.sign(g_tilde(-0.6, ks - 5e-3))
    with pytest.raises(QOutsideJ, match="q outside computed"):
        kappa_star("-2/3", mu_data[0])


def test_G_map_residuals():
    ev = G_map(1.02, -0.208, -0.6)
    assert ev.theta_gap < 1e-8
    assert ev.b > 1


@pytest.fixture(scope="module")
def eta0():
    b = b_level(-0.6, KAPPA_STAR_35)
    return LevelCurvePoint(1.0, b, KAPPA_STAR_35, 0.0, -0.6)


def test_certificate_eta0(eta0):
    c = assemble_annulus(eta0, "-3/5")
    assert (c.m, c.n, c.symmetry_order) == (3, 5, 20)
    assert c.residuals["rotation_index"] == -3
    assert c.residuals["containment_margin"] > 0


def test_certificate_monotone_in_thresholds(eta0):
    with pytest.raises(CertificateRefused) as ei:
        assemble_annulus(eta0, "-3/5", thresholds={"closure": 1e-9})
    assert ei.value.clause == "closure"
    with pytest.raises(CertificateRefused):
        assemble_annulus(eta0, "-3/5", thresholds={"orthogonality": 1e-14})


def test_certificate_refuses_wrong_q(eta0):
    with pytest.raises(CertificateRefused):
        assemble_annulus(eta0, "-2/3")


def test_export(eta0, tmp_path):
    c = assemble_annulus(eta0, "-3/5")
    mesh = export_h3(c, (11, 40))
    assert mesh["h3_residual"] < 1e-8
    assert mesh["h3_residual_raw_relative"] < 1e-8
    assert mesh["boundary_radius_gap"] < 1e-6
    assert np.all(np.linalg.norm(mesh["poincare"], axis=1) < 1)
    pts = mesh["h3"]
    mir = pts * np.array([1, 1, -1, 1])
    d = np.min(np.linalg.norm(pts[:, None, :] - mir[None, :, :], axis=2), axis=1)
    assert d.max() < 1e-6
    write_obj(tmp_path / "m.obj", mesh["poincare"], mesh["faces"], "test")
    lines = (tmp_path / "m.obj").read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 11 * 40
    assert sum(l.startswith("f ") for l in lines) == 2 * 10 * 40
