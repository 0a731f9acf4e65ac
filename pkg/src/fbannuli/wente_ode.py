"""Solutions of the overdetermined Wente system through an ODE cascade.

For (a, b, kappa) in the parameter set O the pair (alpha, beta) solves a
polynomial second order system in u, x(v) solves x'' = p'(x)/8 with
x(0) = 1/a, and omega(u, v) solves 2 omega_u = alpha e^omega + beta e^-omega
with omega(0, v) = log x(v).  The result satisfies the Gauss equation
Delta omega + kappa e^{2 omega} - e^{-2 omega}/4 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import solve_ivp

from .spaceform import check_curvature

__all__ = [
    "ParamTriple",
    "DerivedConstants",
    "derived_constants",
    "first_integrals",
    "AlphaBetaTrajectory",
    "integrate_alphabeta",
    "alphabeta_rhs",
    "p_polynomial",
    "VProfile",
    "v_profile",
    "sigma",
    "sigma_by_ode",
    "phi_function",
    "MetricField",
    "omega_field",
    "gauss_residual",
    "gauss_residual_field",
    "DEFAULT_TOL",
    "OMEGA_GUARD",
    "sin2_nodes",
    "trajectory_to_csv",
    "save_field",
    "load_field",
]

DEFAULT_TOL = 1e-10
OMEGA_GUARD = 50.0
BLOWUP_GUARD = 1e6
_QUAD_NODES = 96


@dataclass(frozen=True)
class ParamTriple:
    """A point (a, b, kappa) of O: a, b >= 1, 4|kappa| < 1 and -4 kappa a < b."""

    a: float
    b: float
    kappa: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "kappa", check_curvature(self.kappa))
        if not (self.a >= 1.0 and self.b >= 1.0):
            raise ValueError(f"need a, b >= 1, got a={self.a}, b={self.b}")
        if not (-4.0 * self.kappa * self.a < self.b):
            raise ValueError("need -4 kappa a < b")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.kappa)


@dataclass(frozen=True)
class DerivedConstants:
    A: float
    B: float
    ahat: float
    alpha_p0: float
    beta_p0: float
    C1: float
    C2: float | None


def derived_constants(p: ParamTriple) -> DerivedConstants:
    a, b, k = p.a, p.b, p.kappa
    A = a + 1.0 / a
    B = b + 4.0 * k / b
    ahat = (-A * B + 4.0 * k + 1.0) / 4.0
    ap0 = (B - 4.0 * k * A) / 4.0
    bp0 = (A - B) / 4.0
    C1 = ap0 * bp0
    C2 = 4.0 * (np.sqrt(k) * bp0 - ap0 / 2.0) ** 2 if k >= 0.0 else None
    return DerivedConstants(A, B, ahat, ap0, bp0, C1, C2)


def first_integrals(y, p: ParamTriple, dc: DerivedConstants | None = None):
    """Evaluate (C1, C2) on states y = (alpha, beta, alpha', beta'); C2 is None for kappa < 0."""
    dc = dc or derived_constants(p)
    k = p.kappa
    al, be, alp, bep = (np.asarray(c) for c in y[:4])
    c1 = alp * bep - dc.ahat * al * be + al**2 * be**2 + k * be**2 + al**2 / 4.0
    if k < 0.0:
        return c1, None
    sk = np.sqrt(k)
    c2 = (al * bep - alp * be) ** 2 + 4.0 * (sk * bep - alp / 2.0) ** 2 + 4.0 * (al * be - dc.ahat - sk) * (
        al / 2.0 - sk * be
    ) ** 2
    return c1, c2


def alphabeta_rhs(ahat: float, kappa: float):
    def rhs(u, y):
        al, be, alp, bep = y[0], y[1], y[2], y[3]
        return np.array(
            [
                alp,
                bep,
                ahat * al - 2.0 * al * al * be - 2.0 * kappa * be,
                ahat * be - 2.0 * al * be * be - 0.5 * al,
            ]
        )

    return rhs


def _blowup_event(u, y):
    return BLOWUP_GUARD - max(abs(y[0]), abs(y[1]))


_blowup_event.terminal = True


@dataclass(frozen=True)
class AlphaBetaTrajectory:
    """Dense (alpha, beta, alpha', beta') on [u_min, u_max]; both halves integrated separately."""

    params: ParamTriple
    constants: DerivedConstants
    forward: object
    backward: object
    u_max: float
    u_min: float
    blowup: bool

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 0
        uu = np.atleast_1d(u)
        if np.any(uu > self.u_max + 1e-12) or np.any(uu < self.u_min - 1e-12):
            raise ValueError("u outside the integrated range")
        out = np.empty((4, uu.size))
        pos = uu >= 0.0
        if np.any(pos):
            out[:, pos] = self.forward(uu[pos])
        if np.any(~pos):
            out[:, ~pos] = self.backward(uu[~pos])
        return out[:, 0] if scalar else out


def integrate_alphabeta(p: ParamTriple, u_max: float, tol: float = DEFAULT_TOL) -> AlphaBetaTrajectory:
    """Integrate the (alpha, beta) system with DOP853 in both directions from u = 0."""
    if u_max <= 0 or tol <= 0:
        raise ValueError("u_max and tol must be positive")
    dc = derived_constants(p)
    rhs = alphabeta_rhs(dc.ahat, p.kappa)
    y0 = [0.0, 0.0, dc.alpha_p0, dc.beta_p0]
    kw = dict(method="DOP853", rtol=tol, atol=tol, dense_output=True, events=_blowup_event)
    fw = solve_ivp(rhs, (0.0, u_max), y0, **kw)
    bw = solve_ivp(rhs, (0.0, -u_max), y0, **kw)
    blow = fw.status == 1 or bw.status == 1
    return AlphaBetaTrajectory(p, dc, fw.sol, bw.sol, float(fw.t[-1]), float(bw.t[-1]), bool(blow))


def p_polynomial(p: ParamTriple) -> Polynomial:
    """p(x) = -(x - a)(x - 1/a)(4 kappa x + b)(x + 1/b)."""
    a, b, k = p.a, p.b, p.kappa
    return -(Polynomial([-a, 1.0]) * Polynomial([-1.0 / a, 1.0]) * Polynomial([b, 4.0 * k]) * Polynomial([1.0 / b, 1.0]))


def sin2_nodes(n: int = _QUAD_NODES):
    """Gauss-Legendre nodes on [0, pi] in the angle s of t = sin^2(s/2).

    Returns (t, w) such that int_0^1 f(t) dt / sqrt(t (1 - t)) = sum w f(t).
    """
    x, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * np.pi * (x + 1.0)
    return np.sin(0.5 * s) ** 2, 0.5 * np.pi * w


def sigma(p: ParamTriple, n: int = _QUAD_NODES) -> float:
    """Half period of x(v): sigma = int_{1/a}^{a} 2 dx / sqrt(p(x)).

    Substituting x = (a - 1/a) t + 1/a cancels the factor (a - 1/a) and
    t = sin^2(s/2) removes both inverse square roots, leaving a smooth
    integrand that is also valid at a = 1.
    """
    a, b, k = p.a, p.b, p.kappa
    t, w = sin2_nodes(n)
    x = (a - 1.0 / a) * t + 1.0 / a
    g = (4.0 * k * x + b) * (x + 1.0 / b)
    return float(np.sum(w * 2.0 / np.sqrt(g)))


def _xvv_rhs(dp: Polynomial):
    def rhs(v, y):
        return [y[1], dp(y[0]) / 8.0]

    return rhs


def sigma_by_ode(p: ParamTriple, tol: float = 1e-12) -> float:
    """Independent route: first time x'(v) returns to zero after v = 0 (a > 1)."""
    if p.a == 1.0:
        raise ValueError("x is constant when a = 1")
    dp = p_polynomial(p).deriv()

    def turn(v, y):
        return y[1]

    turn.terminal = True
    turn.direction = -1
    sol = solve_ivp(_xvv_rhs(dp), (0.0, 1e3), [1.0 / p.a, 0.0], method="DOP853", rtol=tol, atol=tol, events=turn)
    # the start point x'(0) = 0 is not reported because direction=-1 excludes it
    return float(sol.t_events[0][0])


@dataclass(frozen=True)
class VProfile:
    """x(v) = e^{omega(0, v)} with half period sigma; extended by reflection and periodicity."""

    params: ParamTriple
    sigma: float
    sol: object | None

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        if self.sol is None:
            ones = np.ones_like(v)
            return np.stack([ones, 0.0 * v])
        s = self.sigma
        w = np.mod(v, 2.0 * s)
        refl = w > s
        ww = np.where(refl, 2.0 * s - w, w)
        xy = np.asarray(self.sol(np.atleast_1d(ww).ravel())).reshape((2,) + np.shape(ww))
        x = xy[0]
        xp = np.where(refl, -xy[1], xy[1])
        return np.stack([x, xp])

    def energy_residual(self, v):
        """4 x'^2 - p(x) along the profile."""
        x, xp = self(v)
        return 4.0 * xp**2 - p_polynomial(self.params)(x)


def v_profile(p: ParamTriple, tol: float = DEFAULT_TOL) -> VProfile:
    s = sigma(p)
    if p.a == 1.0:
        return VProfile(p, s, None)
    dp = p_polynomial(p).deriv()
    sol = solve_ivp(_xvv_rhs(dp), (0.0, s), [1.0 / p.a, 0.0], method="DOP853", rtol=tol, atol=tol * 1e-2,
                    dense_output=True)
    return VProfile(p, s, sol.sol)


def phi_function(y, omega, dc: DerivedConstants, kappa: float):
    """phi(u, v); equals 4 omega_v^2 on a solution."""
    al, be, alp, bep = y[0], y[1], y[2], y[3]
    e = np.exp(omega)
    ei = 1.0 / e
    return (-(4.0 * kappa + al**2) * e**2 - (1.0 + be**2) * ei**2 - 4.0 * alp * e + 4.0 * bep * ei
            + 6.0 * al * be - 4.0 * dc.ahat)


@dataclass
class MetricField:
    """omega on a (u, v) grid with omega_u, omega_v and residual diagnostics."""

    params: ParamTriple
    u: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    omega_u: np.ndarray
    omega_v: np.ndarray
    sigma: float
    u_strip: float
    strip_exhausted: bool
    phi_residual: float = field(default=np.nan)

    def gauss_residual(self) -> float:
        return gauss_residual(self, self.params.kappa)


def _field_rhs(ahat: float, kappa: float, n: int):
    abr = alphabeta_rhs(ahat, kappa)

    def rhs(u, y):
        al, be = y[0], y[1]
        om = y[4 : 4 + n]
        ov = y[4 + n :]
        e = np.exp(om)
        ei = 1.0 / e
        out = np.empty_like(y)
        out[:4] = abr(u, y[:4])
        out[4 : 4 + n] = 0.5 * (al * e + be * ei)
        out[4 + n :] = 0.5 * (al * e - be * ei) * ov
        return out

    return rhs


def omega_field(
    p: ParamTriple,
    u_max: float,
    v_grid=None,
    tol: float = DEFAULT_TOL,
    n_u: int = 201,
) -> MetricField:
    """Integrate omega(., v0) for every v0 in v_grid over u in [-u_max, u_max].

    omega_v is transported along u by its linear equation
    2 omega_vu = (alpha e^omega - beta e^-omega) omega_v from omega_v(0, v0) = x'/x.
    The integration stops at the first u where |omega| exceeds the guard;
    the reached |u| is reported as the strip half-width.
    """
    prof = v_profile(p, tol)
    if v_grid is None:
        v_grid = np.linspace(0.0, 2.0 * prof.sigma, 4096)
    v_grid = np.asarray(v_grid, dtype=float)
    n = v_grid.size
    x, xp = prof(v_grid)
    dc = derived_constants(p)
    y0 = np.concatenate([[0.0, 0.0, dc.alpha_p0, dc.beta_p0], np.log(x), xp / x])
    rhs = _field_rhs(dc.ahat, p.kappa, n)

    def guard(u, y):
        return OMEGA_GUARD - np.max(np.abs(y[4 : 4 + n]))

    guard.terminal = True
    u_half = np.linspace(0.0, u_max, (n_u + 1) // 2)
    halves = []
    reach = []
    for sgn in (1.0, -1.0):
        sol = solve_ivp(rhs, (0.0, sgn * u_max), y0, method="DOP853", rtol=tol, atol=tol, dense_output=True,
                        events=guard)
        reach.append(abs(sol.t[-1]))
        uu = sgn * u_half
        ok = np.abs(uu) <= abs(sol.t[-1])
        vals = np.full((y0.size, uu.size), np.nan)
        vals[:, ok] = sol.sol(uu[ok])
        halves.append(vals)
    u_strip = min(reach)
    exhausted = u_strip < u_max
    u = np.concatenate([-u_half[::-1], u_half[1:]])
    vals = np.concatenate([halves[1][:, ::-1], halves[0][:, 1:]], axis=1)
    om = vals[4 : 4 + n].T
    ov = vals[4 + n :].T
    ab = vals[:4]
    e = np.exp(om)
    ou = 0.5 * (ab[0][:, None] * e + ab[1][:, None] / e)
    phi = phi_function(ab[:, :, None], om, dc, p.kappa)
    with np.errstate(invalid="ignore"):
        phires = float(np.nanmax(np.abs(ov**2 - 0.25 * phi))) if p.a != 1.0 else float(np.nanmax(np.abs(phi)))
    return MetricField(p, u, v_grid, om, ou, ov, prof.sigma, float(u_strip), bool(exhausted), phires)


def gauss_residual_field(fld: MetricField, kappa: float) -> np.ndarray:
    """Centred-difference Gauss residual on the interior grid points, shape (n_u - 2, n_v - 2)."""
    om = fld.omega
    hu = fld.u[1] - fld.u[0]
    hv = fld.v[1] - fld.v[0]
    c = om[1:-1, 1:-1]
    lap = (om[2:, 1:-1] - 2.0 * c + om[:-2, 1:-1]) / hu**2 + (om[1:-1, 2:] - 2.0 * c + om[1:-1, :-2]) / hv**2
    return lap + kappa * np.exp(2.0 * c) - 0.25 * np.exp(-2.0 * c)


def gauss_residual(fld: MetricField, kappa: float) -> float:
    """Max-norm of the centred-difference Gauss residual on interior grid points."""
    return float(np.nanmax(np.abs(gauss_residual_field(fld, kappa))))


def trajectory_to_csv(traj: AlphaBetaTrajectory, path, u=None) -> None:
    """Write (u, alpha, beta, alpha', beta') samples as CSV."""
    if u is None:
        u = np.linspace(traj.u_min, traj.u_max, 401)
    y = traj(np.asarray(u, dtype=float))
    data = np.column_stack([u, y.T])
    np.savetxt(path, data, delimiter=",", header="u,alpha,beta,alpha_p,beta_p", comments="", fmt="%.17g")


def save_field(fld: MetricField, stem) -> None:
    """Binary grid (stem.bin, float64 little-endian, omega then omega_u then omega_v) plus stem.json header."""
    import json
    from pathlib import Path

    stem = Path(stem)
    arr = np.stack([fld.omega, fld.omega_u, fld.omega_v]).astype("<f8")
    stem.with_suffix(".bin").write_bytes(arr.tobytes())
    header = {
        "shape": [3, int(fld.u.size), int(fld.v.size)],
        "layout": "omega, omega_u, omega_v; each (n_u, n_v) row-major",
        "u_min": float(fld.u[0]),
        "u_max": float(fld.u[-1]),
        "v_min": float(fld.v[0]),
        "v_max": float(fld.v[-1]),
        "sigma": fld.sigma,
        "u_strip": fld.u_strip,
        "params": {"a": fld.params.a, "b": fld.params.b, "kappa": fld.params.kappa},
    }
    stem.with_suffix(".json").write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")


def load_field(stem) -> tuple[dict, np.ndarray]:
    import json
    from pathlib import Path

    stem = Path(stem)
    header = json.loads(stem.with_suffix(".json").read_text(encoding="utf-8"))
    arr = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype="<f8").reshape(header["shape"])
    return header, arr
