from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbannuli.hamilton import (
    RootNotFound,
    F_wente,
    cubic_roots,
    fhm_root,
    first_root,
    lambda_of_u,
    periods_MN,
    st_transform,
    tau_info,
    u1,
)
from fbannuli.wente_ode import ParamTriple, derived_constants, integrate_alphabeta


def test_cubic_examples():
    cd = cubic_roots(ParamTriple(1, 1, 0))
    assert (cd.r1, cd.r2, cd.r3) == pytest.approx((-0.25, -0.25, 0.25), abs=1e-15)
    cd = cubic_roots(ParamTriple(2, 1, 0))
    assert (cd.r1, cd.r2) == pytest.approx((-0.5, -0.125))
    # b = 2 a sqrt(kappa) with a = 1 gives b < 1, so the r2 = 0 case is taken at a = 2
    k = 0.1
    assert cubic_roots(ParamTriple(2.0, 4 * np.sqrt(k), k)).r2 == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        cubic_roots(ParamTriple(1, 1, -0.1))


@given(st.floats(1, 2), st.floats(1, 2.5), st.floats(0, 0.2))
@settings(max_examples=60)
def test_cubic_closed_form_vs_numeric(a, b, k):
    cd = cubic_roots(ParamTriple(a, b, k))
    closed = np.sort([cd.r1, cd.r2, cd.r3])
    assert np.max(np.abs(closed - np.array(cd.numeric))) < 1e-6  # double roots lose half the digits
    assert cd.r1 <= cd.r2 <= 0 < cd.r3
    assert np.polyval(cd.coeffs, cd.r3) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 0.24))
def test_st_identities(al, be, k):
    p = st_transform(al, be, k)
    rk = np.sqrt(k)
    assert p.s >= p.t
    assert abs(p.s + p.t - 2 * rk - al * be) < 1e-12 * max(1, abs(al * be))
    assert abs(-p.s * p.t - (al / 2 - rk * be) ** 2) < 1e-11 * max(1, al * al, be * be) ** 2


def test_st_examples():
    p = st_transform(0.0, 0.0, 0.04)
    assert (p.s, p.t) == pytest.approx((0.4, 0.0))
    p = st_transform(0.0, 0.0, 0.0)
    assert (p.s, p.t) == (0.0, 0.0)


def test_st_flow_equation():
    p = ParamTriple(1.2, 1.3, 0.05)
    traj = integrate_alphabeta(p, 2.0, 1e-12)
    rk = np.sqrt(p.kappa)
    g = np.poly1d(cubic_roots(p).coeffs)
    for u in (0.3, 0.8, 1.4):
        h = 1e-5
        st_ = [st_transform(*traj(x)[:2], p.kappa) for x in (u - h, u, u + h)]
        dsdu = (st_[2].s - st_[0].s) / (2 * h)
        dlam_du = 2.0 / (st_[1].s - st_[1].t)
        s = st_[1].s
        assert st_[1].s - st_[1].t >= 2 * rk
        assert abs((dsdu / dlam_du) ** 2 - s * (s - 2 * rk) * g(s)) < 1e-6


def test_periods():
    M, N = periods_MN(ParamTriple(1.2, 1.3, 0.05))
    assert M < N
    M, N = periods_MN(ParamTriple(1.0, 1.3, 0.05))
    assert N == float("inf")
    with pytest.raises(ValueError):
        periods_MN(ParamTriple(1.2, 1.3, 0.0))


@pytest.mark.parametrize("p", [ParamTriple(1.2, 1.3, 0.05), ParamTriple(1.5, 1.5, 0.02)])
def test_lambda_u1_equals_M(p):
    t1 = u1(p)
    traj = integrate_alphabeta(p, t1 + 0.1, 1e-12)
    assert abs(lambda_of_u(traj, t1) - periods_MN(p)[0]) < 1e-6
    y = traj(t1)
    assert abs(y[0] / 2 + np.sqrt(p.kappa) * y[1]) < 1e-10
    uu = np.linspace(1e-3, t1, 200)
    z = traj(uu)
    if derived_constants(p).B > 2 * np.sqrt(p.kappa) * derived_constants(p).A:
        assert np.all(z[0] / 2 - np.sqrt(p.kappa) * z[1] > 0)


def test_u1_kappa_zero_is_alpha_root():
    p = ParamTriple(1.3, 1.1, 0.0)
    t1 = u1(p)
    assert abs(integrate_alphabeta(p, t1 + 0.1, 1e-12)(t1)[0]) < 1e-10
    with pytest.raises(ValueError):
        u1(ParamTriple(1, 1, 0))


def test_tau_unit():
    ti = tau_info(ParamTriple(1, 1, 0))
    assert ti.tau == pytest.approx(2.9780821791752325, abs=1e-9)
    assert ti.beta_p < 0 and ti.alpha > 0
    assert abs(F_wente(2 * ti.alpha) + 1.0) < 1e-6
    assert abs(2 * ti.alpha - fhm_root()) < 1e-8


def test_tau_degenerate_equals_u1():
    a, k = 2.0, 0.1
    b = 2 * np.sqrt(k) * a
    p = ParamTriple(a, b, k)
    ti = tau_info(p)
    assert abs(ti.tau - u1(p)) < 1e-9
    assert abs(ti.alpha) < 1e-9


def test_tau_limit_b_to_2():
    assert tau_info(ParamTriple(1, 1.999, 0)).tau < 0.5
    with pytest.raises(RootNotFound):
        tau_info(ParamTriple(1, 2.0, 0))


def test_tau_continuity_across_zero():
    for a, b in [(1.0, 1.2), (1.1, 1.1), (1.2, 1.4), (1.05, 1.5), (1.3, 1.3)]:
        assert abs(tau_info(ParamTriple(a, b, 1e-6)).tau - tau_info(ParamTriple(a, b, -1e-6)).tau) < 1e-4


def test_first_root_reports_missing():
    traj = integrate_alphabeta(ParamTriple(1, 1, 0), 1.0)
    with pytest.raises(RootNotFound):
        first_root(traj, lambda y: y[1])


def test_fhm():
    assert F_wente(0.8) == pytest.approx(-0.862875, abs=2e-6)
    x = np.linspace(0.01, 0.99, 200)
    assert np.all(np.diff(F_wente(x)) > 0)
    assert F_wente(0.3) < F_wente(0.5) < F_wente(0.8)
    assert fhm_root() == pytest.approx(0.7754954570560013, abs=1e-12)
    with pytest.raises(ValueError):
        F_wente(1.0)
