"""The (s, t) reduction of the (alpha, beta) system, the maps u1 and tau,
and the special function F(x) = H(x) H(-x).

tau is always computed directly from the (alpha, beta) ODE; the (s, t)
machinery is diagnostic and only real for kappa >= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .wente_ode import (
    AlphaBetaTrajectory,
    ParamTriple,
    derived_constants,
    integrate_alphabeta,
    sin2_nodes,
)

__all__ = [
    "CubicData",
    "STPoint",
    "cubic_roots",
    "g_polynomial",
    "st_transform",
    "periods_MN",
    "lambda_of_u",
    "RootNotFound",
    "StripExhausted",
    "first_root",
    "u1",
    "TauInfo",
    "tau",
    "tau_info",
    "H_function",
    "F_wente",
    "fhm_root",
    "SCAN_U_END",
]

SCAN_U_END = 20.0


class RootNotFound(ValueError):
    """No sign change found over the integrated range."""


class StripExhausted(RuntimeError):
    """The trajectory diverged before a root was bracketed."""


@dataclass(frozen=True)
class CubicData:
    coeffs: tuple[float, float, float, float]
    r1: float
    r2: float
    r3: float
    numeric: tuple[float, float, float]


def g_polynomial(p: ParamTriple) -> np.ndarray:
    """Coefficients (highest first) of g(x) = -x^3 + (a^ + 3 rk) x^2 + (C1 - 2 a^ rk - 2k) x + C2/4."""
    if p.kappa < 0.0:
        raise ValueError("the (s, t) reduction is real only for kappa >= 0")
    dc = derived_constants(p)
    rk = np.sqrt(p.kappa)
    return np.array([-1.0, dc.ahat + 3.0 * rk, dc.C1 - 2.0 * dc.ahat * rk - 2.0 * p.kappa, dc.C2 / 4.0])


def cubic_roots(p: ParamTriple) -> CubicData:
    co = g_polynomial(p)
    a, b, rk = p.a, p.b, np.sqrt(p.kappa)
    r1 = -((a * b - 2.0 * rk) ** 2) / (4.0 * a * b)
    r2 = -((2.0 * a * rk - b) ** 2) / (4.0 * a * b)
    r3 = (2.0 * rk + 1.0) ** 2 / 4.0
    num = np.sort(np.real(np.roots(co)))
    return CubicData(tuple(co), r1, r2, r3, tuple(num))


@dataclass(frozen=True)
class STPoint:
    s: np.ndarray
    t: np.ndarray


def st_transform(alpha, beta, kappa: float) -> STPoint:
    if kappa < 0.0:
        raise ValueError("the (s, t) reduction is real only for kappa >= 0")
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    rk = np.sqrt(kappa)
    root = 0.5 * np.sqrt((2.0 * rk + alpha * beta) ** 2 + (alpha - 2.0 * rk * beta) ** 2)
    base = rk + 0.5 * alpha * beta
    return STPoint(base + root, base - root)


def periods_MN(p: ParamTriple, n: int = 200) -> tuple[float, float | None]:
    """Periods of s(lambda) and t(lambda); N is inf when r1 = r2 and None when r2 = 0.

    Each integral has two simple square-root endpoint singularities which the
    substitution z = lo + (hi - lo) sin^2(theta/2) removes.
    """
    if p.kappa <= 0.0:
        raise ValueError("periods M, N are defined for kappa > 0")
    cd = cubic_roots(p)
    r1, r2, r3 = cd.r1, cd.r2, cd.r3
    tk = 2.0 * np.sqrt(p.kappa)
    t, w = sin2_nodes(n)
    z = tk + (r3 - tk) * t
    M = 2.0 * float(np.sum(w / np.sqrt(z * (z - r1) * (z - r2))))
    if r2 >= 0.0 or abs(r2) < 1e-15:
        return M, None
    if r2 - r1 <= 1e-14 * max(1.0, abs(r1)):
        return M, float("inf")
    z = r2 - r2 * t
    N = 2.0 * float(np.sum(w / np.sqrt((tk - z) * (r3 - z) * (z - r1))))
    return M, N


def lambda_of_u(traj: AlphaBetaTrajectory, u: float) -> float:
    """lambda(u) = int_0^u 2 / (s - t) du along the trajectory (kappa > 0)."""
    k = traj.params.kappa

    def integrand(x):
        al, be = traj(x)[:2]
        st = st_transform(al, be, k)
        return 2.0 / (st.s - st.t)

    val, _ = quad(integrand, 0.0, u, epsabs=1e-13, epsrel=1e-13, limit=200)
    return float(val)


def first_root(traj: AlphaBetaTrajectory, fn, step: float | None = None, xtol: float = 1e-14) -> float:
    """First positive sign change of fn(state) on the forward branch, refined by Brent."""
    u_end = traj.u_max
    if step is None:
        step = min(0.01, u_end / 1000.0)
    grid = np.arange(step, u_end + 0.5 * step, step)
    grid = grid[grid <= u_end]
    vals = fn(traj(grid))
    s0 = np.sign(vals[0])
    if s0 == 0:
        return float(grid[0])
    idx = np.nonzero(np.sign(vals) != s0)[0]
    if idx.size == 0:
        if traj.blowup:
            raise StripExhausted(f"trajectory diverged at u={u_end:.6g} before a root was bracketed")
        raise RootNotFound(f"no sign change on (0, {u_end:.6g}]")
    i = int(idx[0])
    lo = grid[i - 1] if i > 0 else grid[0] * 0.5
    return float(brentq(lambda x: fn(traj(x)), lo, grid[i], xtol=xtol, rtol=4 * np.finfo(float).eps))


def _growing_root(p: ParamTriple, fn, tol: float, traj: AlphaBetaTrajectory | None) -> float:
    """first_root on horizons 4, 8, 16, SCAN_U_END; the scan step follows the current horizon."""
    if traj is not None:
        return first_root(traj, fn)
    horizon = 4.0
    while True:
        tr = integrate_alphabeta(p, horizon, tol)
        try:
            return first_root(tr, fn, step=min(0.01, SCAN_U_END / 1000.0))
        except RootNotFound:
            if horizon >= SCAN_U_END:
                raise
        horizon = min(2.0 * horizon, SCAN_U_END)


def u1(p: ParamTriple, tol: float = 1e-12, traj: AlphaBetaTrajectory | None = None) -> float:
    """First positive root of y = alpha/2 + sqrt(kappa) beta (of alpha when kappa = 0)."""
    if p.kappa < 0.0 or (p.kappa == 0.0 and p.a == 1.0):
        raise ValueError("u1 needs kappa > 0, or kappa = 0 with a > 1")
    rk = np.sqrt(p.kappa)
    return _growing_root(p, lambda y: 0.5 * y[0] + rk * y[1], tol, traj)


@dataclass(frozen=True)
class TauInfo:
    tau: float
    alpha: float
    beta: float
    alpha_p: float
    beta_p: float

    def to_dict(self) -> dict:
        return asdict(self)


def tau_info(p: ParamTriple, tol: float = 1e-12, traj: AlphaBetaTrajectory | None = None) -> TauInfo:
    """First positive root of beta, for p in the operational set W (beta'(0) > 0)."""
    dc = derived_constants(p)
    if not dc.beta_p0 > 0.0:
        raise RootNotFound("beta'(0) <= 0: the triple is outside W (A <= B)")
    t = _growing_root(p, lambda y: y[1], tol, traj)
    al, be, alp, bep = (traj or integrate_alphabeta(p, t * 1.001 + 1e-3, tol))(t)
    return TauInfo(t, float(al), float(be), float(alp), float(bep))


def tau(p: ParamTriple, tol: float = 1e-12) -> float:
    return tau_info(p, tol).tau


def H_function(x):
    x = np.asarray(x, dtype=float)
    r = np.sqrt(1.0 - x)
    return (1.0 + r) / (1.0 - r) * ((np.sqrt(2.0) - r) / (np.sqrt(2.0) + r)) ** (1.0 / np.sqrt(2.0))


def F_wente(x):
    """F(x) = H(x) H(-x) on 0 < x < 1."""
    xa = np.asarray(x, dtype=float)
    if np.any((xa <= 0.0) | (xa >= 1.0)):
        raise ValueError("F_wente is defined for 0 < x < 1")
    out = H_function(xa) * H_function(-xa)
    return float(out) if out.ndim == 0 else out


def fhm_root() -> float:
    """The x in (0, 4/5) with F(x) = -1."""
    return float(brentq(lambda x: F_wente(x) + 1.0, 1e-6, 0.8, xtol=1e-15))
