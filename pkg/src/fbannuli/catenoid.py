"""Rotational minimal surfaces (catenoids) of M^3(kappa) and their free boundary pieces.

The profile (x, x3, x4)(s) in arclength s solves a regular linear-in-(x3, x4)
system that is valid for every |kappa| < 1/4, so kappa = 0 needs no special
treatment.  The boundary of the free boundary piece sits at the first
positive root s~ of F = x3 x' - x3' x.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .spaceform import E4, check_curvature
from .wente_ode import ParamTriple, derived_constants

__all__ = [
    "CatenoidProfile",
    "profile",
    "delta",
    "h_poly",
    "F_of_s",
    "s_tilde",
    "ArclengthMap",
    "arclength_map",
    "u_tilde",
    "G_function",
    "u_tilde_euclidean",
    "s_tilde_euclidean",
    "FBBall",
    "fb_ball",
    "orth_radius",
    "orth_radius_from_ab",
    "hat_p",
    "x3_by_quadrature",
    "rotational_psi",
]

_TOL = 1e-12


def delta(kappa: float) -> float:
    return 2.0 / (4.0 * kappa + 1.0)


def h_poly(x, kappa: float):
    """h(x) = x^2 - kappa x^4 - delta^2; x'^2 = h(x) / x^2 along the profile."""
    return x * x - kappa * x**4 - delta(kappa) ** 2


def _profile_rhs(kappa: float):
    d = delta(kappa)

    def rhs(s, y):
        x, xp, x3, x4 = y
        q = kappa * x * x - 1.0
        c = kappa * x * xp / q
        return [xp, -kappa * x + d * d / x**3, c * x3 - d * x4 / (x * q), c * x4 + kappa * d * x3 / (x * q)]

    return rhs


@dataclass
class CatenoidProfile:
    """Dense (x, x', x3, x4) on [-s_max, s_max]; x, x4 even and x3 odd in s."""

    kappa: float
    s_max: float
    sol: object

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(np.abs(s) > self.s_max + 1e-12):
            raise ValueError("s outside the integrated profile range")
        y = np.asarray(self.sol(np.abs(s).ravel())).reshape((4,) + s.shape)
        sg = np.where(s < 0.0, -1.0, 1.0)
        return np.stack([y[0], sg * y[1], sg * y[2], y[3]])

    def derivative(self, s):
        """(x', x'', x3', x4') from the system itself."""
        y = self(s)
        rhs = _profile_rhs(self.kappa)
        return np.asarray(rhs(0.0, y))

    def point(self, s) -> np.ndarray:
        x, _, x3, x4 = self(s)
        return np.stack([x, np.zeros_like(x), x3, x4], axis=-1)


def profile(kappa: float, s_max: float = 12.0, tol: float = _TOL) -> CatenoidProfile:
    kappa = check_curvature(kappa)
    r = np.sqrt(4.0 * kappa + 1.0)
    sol = solve_ivp(_profile_rhs(kappa), (0.0, s_max), [2.0 / r, 0.0, 0.0, 1.0 / r], method="DOP853",
                    rtol=tol, atol=tol, dense_output=True)
    return CatenoidProfile(kappa, float(s_max), sol.sol)


def F_of_s(prof: CatenoidProfile, s):
    """F = x3 x' - x3' x and its closed-form derivative."""
    x, xp, x3, x4 = prof(s)
    x3p = prof.derivative(s)[2]
    k = prof.kappa
    F = x3 * xp - x3p * x
    Fp = 2.0 * (2.0 * x3 + (1.0 + 4.0 * k) * x * x * xp * x4) / ((1.0 + 4.0 * k) ** 2 * x**3 * (1.0 - k * x * x))
    return F, Fp


def s_tilde(kappa: float, prof: CatenoidProfile | None = None, step: float = 0.01) -> float:
    """First positive root of F."""
    prof = prof or profile(kappa)
    grid = np.arange(step, prof.s_max, step)
    F = F_of_s(prof, grid)[0]
    idx = np.nonzero(F > 0.0)[0]
    if idx.size == 0:
        raise ValueError(f"F has no positive root on (0, {prof.s_max}] for kappa={kappa}")
    i = int(idx[0])
    lo = grid[i - 1] if i > 0 else 0.0
    return float(brentq(lambda s: F_of_s(prof, s)[0], lo, grid[i], xtol=1e-15))


def s_tilde_euclidean() -> float:
    """Root of arcsinh(s/2) = sqrt(s^2 + 4)/s."""
    return float(brentq(lambda s: np.arcsinh(s / 2.0) - np.sqrt(s * s + 4.0) / s, 1.0, 6.0, xtol=1e-15))


def G_function(u):
    """G(u) = u - 2 coth(u/2), increasing on u > 0."""
    return u - 2.0 / np.tanh(u / 2.0)


def u_tilde_euclidean() -> float:
    return float(brentq(G_function, 0.5, 6.0, xtol=1e-15))


@dataclass
class ArclengthMap:
    """s(u) = int_0^u e^omega along v = 0 of the rotational surface (1, b, kappa)."""

    kappa: float
    b: float
    u_max: float
    sol: object

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        y = np.asarray(self.sol(np.abs(u).ravel()))
        s = y[5].reshape(u.shape)
        return np.where(u < 0.0, -s, s)

    def omega(self, u):
        u = np.asarray(u, dtype=float)
        return np.asarray(self.sol(np.abs(u).ravel()))[4].reshape(u.shape)


def arclength_map(kappa: float, b: float = 1.0, u_max: float = 6.0, tol: float = _TOL) -> ArclengthMap:
    """Integrate (alpha, beta) at a = 1 together with omega and s' = e^omega."""
    p = ParamTriple(1.0, b, kappa)
    dc = derived_constants(p)
    k = p.kappa

    def rhs(u, y):
        al, be, alp, bep, om, _ = y
        e = np.exp(om)
        return [alp, bep, dc.ahat * al - 2 * al * al * be - 2 * k * be, dc.ahat * be - 2 * al * be * be - 0.5 * al,
                0.5 * (al * e + be / e), e]

    def guard(u, y):
        return 50.0 - abs(y[4])

    guard.terminal = True
    sol = solve_ivp(rhs, (0.0, u_max), [0.0, 0.0, dc.alpha_p0, dc.beta_p0, 0.0, 0.0], method="DOP853",
                    rtol=tol, atol=tol, dense_output=True, events=guard)
    return ArclengthMap(k, b, float(sol.t[-1]), sol.sol)


def u_tilde(kappa: float, b: float = 1.0, smap: ArclengthMap | None = None) -> float:
    """u~ with s(u~) = s~(kappa); s(u) is increasing so a scan brackets the root."""
    st = s_tilde(kappa)
    smap = smap or arclength_map(kappa, b)
    grid = np.linspace(0.0, smap.u_max, 2001)
    vals = smap(grid) - st
    idx = np.nonzero(vals > 0.0)[0]
    if idx.size == 0:
        raise ValueError("s(u) never reaches s~ within the strip")
    i = int(idx[0])
    return float(brentq(lambda u: float(smap(u)) - st, grid[i - 1], grid[i], xtol=1e-15))


@dataclass(frozen=True)
class FBBall:
    """Ball B[e4, level] (kappa != 0) or Euclidean ball of radius R about e4 (kappa = 0)."""

    kappa: float
    center: np.ndarray
    level: float | None
    radius: float | None
    geodesic_radius: float
    s_tilde: float

    def margin(self, x) -> np.ndarray:
        """Positive inside the ball; measured in geodesic distance to the boundary sphere."""
        x = np.asarray(x, dtype=float)
        k = self.kappa
        if k == 0.0:
            d = np.linalg.norm(x[..., :3], axis=-1)
        elif k < 0.0:
            d = np.arccosh(np.maximum(x[..., 3], 1.0)) / np.sqrt(-k)
        else:
            d = np.arccos(np.clip(x[..., 3], -1.0, 1.0)) / np.sqrt(k)
        return self.geodesic_radius - d

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "center": [float(c) for c in self.center],
            "level": self.level,
            "radius": self.radius,
            "geodesic_radius": self.geodesic_radius,
            "s_tilde": self.s_tilde,
        }


def geodesic_radius_from_x4(x4: float, kappa: float) -> float:
    if kappa < 0.0:
        return float(np.arccosh(x4) / np.sqrt(-kappa))
    return float(np.arccos(x4) / np.sqrt(kappa))


def fb_ball(kappa: float) -> FBBall:
    prof = profile(kappa)
    st = s_tilde(kappa, prof)
    x, _, x3, x4 = prof(st)
    if kappa == 0.0:
        R = float(np.hypot(x, x3))
        return FBBall(0.0, E4.copy(), None, R, R, st)
    return FBBall(kappa, E4.copy(), float(x4 / kappa), None, geodesic_radius_from_x4(float(x4), kappa), st)


def orth_radius(u):
    """R_perp(u) = 2 coth(u/2) cosh(u/2) and the axis centre (0, 0, u - 2 coth(u/2), 1)."""
    u = float(u)
    if u <= 0.0:
        raise ValueError("orth_radius needs u > 0")
    R = 2.0 / np.tanh(u / 2.0) * np.cosh(u / 2.0)
    return float(R), np.array([0.0, 0.0, G_function(u), 1.0])


def orth_radius_from_ab(u, alpha, beta):
    """R_perp = 2/alpha - 2 beta / (alpha sinh(u/2)) from the spherical-line coefficients."""
    return 2.0 / alpha - 2.0 * beta / (alpha * np.sinh(u / 2.0))


def hat_p(prof: CatenoidProfile, u: float, smap: ArclengthMap | None = None) -> np.ndarray:
    """Meeting point of the tangent geodesic of the profile at s(u) with the axis x1 = x2 = 0.

    Works in the chart (x1/x4, x3/x4) of the totally geodesic slice {x2 = 0},
    where geodesics are straight lines.
    """
    k = prof.kappa
    smap = smap or arclength_map(k)
    s = float(smap(u))
    x, xp, x3, x4 = prof(s)
    x4p = prof.derivative(s)[3]
    den = xp * x4 - x * x4p
    if not den > 0.0:
        raise ValueError("tangent geodesic does not meet the axis from the correct side")
    F = F_of_s(prof, s)[0]
    yb = F / den
    w = 1.0 / np.sqrt(1.0 + k * yb * yb)
    return np.array([0.0, 0.0, yb * w, w])


def x3_by_quadrature(prof: CatenoidProfile, s: float) -> float:
    """x3(s) from the angle integral phi(s) (kappa != 0 cross-check)."""
    k = prof.kappa
    d = delta(k)
    if k == 0.0:
        raise ValueError("the angle integral is used only for kappa != 0")

    def integrand(t):
        x = prof(t)[0]
        return d / (np.sqrt(abs(k)) * x * abs(1.0 / k - x * x))

    phi, _ = quad(integrand, 0.0, s, epsabs=1e-13, epsrel=1e-13, limit=200)
    x = prof(s)[0]
    if k > 0.0:
        return float(np.sqrt(1.0 / k - x * x) * np.sin(phi))
    return float(np.sqrt(x * x - 1.0 / k) * np.sinh(phi))


def rotational_psi(kappa: float, u, v, prof: CatenoidProfile | None = None, smap: ArclengthMap | None = None):
    """psi(u, v) of the rotational surface in recentred coordinates via the profile.

    The v-line through u = 0 is a circle traversed with angle sqrt(1 + 4 kappa) v / 2.
    """
    prof = prof or profile(kappa)
    smap = smap or arclength_map(kappa)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    x, _, x3, x4 = prof(smap(u))
    th = np.sqrt(1.0 + 4.0 * kappa) * v / 2.0
    return np.stack([x * np.cos(th), -x * np.sin(th), x3 + 0.0 * th, x4 + 0.0 * th], axis=-1)
