"""The period map Theta and rotation indices of the planar geodesic.

Gamma(v) = psi(0, v) in recentred data lies in the mirror {x3 = 0}; its
stereographic image gamma is a planar curve and Theta is the total turning
of gamma' over [0, sigma] divided by pi.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .immersion import FRAME_TOL, SurfaceSolver
from .spaceform import stereographic, stereographic_jacobian
from .wente_ode import ParamTriple, derived_constants

__all__ = [
    "PlanarCurve",
    "gamma_curve",
    "period_theta",
    "theta_closed_form",
    "b_level",
    "b_solve",
    "rotation_index",
    "closure_gap",
    "dihedral_axes",
    "rational_theta",
    "parse_rational",
    "SAMPLES_PER_2SIGMA",
]

SAMPLES_PER_2SIGMA = 4096


@dataclass
class PlanarCurve:
    """Samples of gamma on [0, n_half * sigma]; angle is the unwrapped tangent angle."""

    params: ParamTriple
    sigma: float
    v: np.ndarray
    xy: np.ndarray
    z: np.ndarray
    tangent: np.ndarray
    angle: np.ndarray

    @property
    def speed(self) -> np.ndarray:
        return np.linalg.norm(self.tangent, axis=1)

    def turning(self) -> float:
        return float(self.angle[-1] - self.angle[0])

    def to_csv(self, path) -> None:
        data = np.column_stack([self.v, self.xy, self.angle])
        np.savetxt(path, data, delimiter=",", header="v,x,y,tangent_angle", comments="", fmt="%.17g")


def gamma_curve(p: ParamTriple, n_half: int = 2, samples_per_2sigma: int = SAMPLES_PER_2SIGMA,
                tol: float = FRAME_TOL, solver: SurfaceSolver | None = None) -> PlanarCurve:
    """Projected geodesic gamma on [0, n_half sigma] from recentred data."""
    if solver is None:
        solver = SurfaceSolver(p, u_max=0.1, tol=tol, recentered=True)
    s = solver.sigma
    n = max(2, int(np.ceil(samples_per_2sigma * n_half / 2)) + 1)
    v = np.linspace(0.0, n_half * s, n)
    fc = solver.v_line(0.0, v)
    g = stereographic(fc.psi)
    dg = stereographic_jacobian(fc.psi, fc.psi_v)
    ang = np.unwrap(np.arctan2(dg[:, 1], dg[:, 0]))
    return PlanarCurve(p, s, v, g[:, :2], g[:, 2], dg[:, :2], ang)


def period_theta(p: ParamTriple, tol: float = FRAME_TOL, samples_per_2sigma: int = SAMPLES_PER_2SIGMA) -> float:
    """Theta(a, b, kappa): turning of gamma' over one half period, over pi."""
    return gamma_curve(p, 1, samples_per_2sigma, tol).turning() / np.pi


def theta_closed_form(b: float, kappa: float) -> float:
    """Theta(1, b, kappa) = -sqrt(4 kappa + 1) / sqrt(4 kappa + B + 1)."""
    B = b + 4.0 * kappa / b
    return float(-np.sqrt(4.0 * kappa + 1.0) / np.sqrt(4.0 * kappa + B + 1.0))


def b_level(theta0: float, kappa: float) -> float:
    """The b with theta_closed_form(b, kappa) = theta0 (larger root of b^2 - B b + 4 kappa)."""
    if not -1.0 < theta0 < 0.0:
        raise ValueError("theta0 must lie in (-1, 0)")
    t2 = theta0 * theta0
    c = (1.0 + 4.0 * kappa) * (1.0 - t2)
    disc = c * c - 16.0 * t2 * t2 * kappa
    if disc < 0.0:
        raise ValueError(f"no real b for theta0={theta0}, kappa={kappa} (discriminant {disc:.3e})")
    return float((c + np.sqrt(disc)) / (2.0 * t2))


def b_solve(theta0: float, a: float, kappa: float, tol: float = FRAME_TOL, xtol: float = 1e-13,
            seed: float | None = None, max_expand: int = 12) -> float:
    """Solve Theta(a, b, kappa) = theta0 in b by Brent's method around a seed.

    Theta is increasing in b near a = 1, so the bracket is grown from the
    seed b_level(theta0, kappa) until the sign changes.
    """
    lo_b = max(1.0, -4.0 * kappa * a) + 1e-12

    def f(b):
        return period_theta(ParamTriple(a, b, kappa), tol) - theta0

    if seed is None:
        try:
            seed = b_level(theta0, kappa)
        except ValueError:
            seed = 1.5
    seed = max(seed, lo_b)
    f0 = f(seed)
    if f0 == 0.0:
        return seed
    step = 0.01
    x0, y0 = seed, f0
    for _ in range(max_expand):
        x1 = x0 - step if y0 > 0 else x0 + step
        if x1 < lo_b:
            x1 = lo_b
        y1 = f(x1)
        if np.sign(y1) != np.sign(y0):
            lo, hi = sorted((x0, x1))
            return float(brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))
        if x1 == lo_b:
            break
        x0, y0 = x1, y1
        step *= 2.0
    raise ValueError(f"b_solve: no bracket for theta0={theta0} at a={a}, kappa={kappa}")


def closure_gap(curve: PlanarCurve) -> float:
    return float(np.linalg.norm(curve.xy[-1] - curve.xy[0]))


def rotation_index(curve: PlanarCurve, n: int | None = None, gap_tol: float = 1e-6) -> int:
    """Winding number of gamma' over the sampled range (expected [0, 2 n sigma])."""
    if n is not None:
        span = curve.v[-1] - curve.v[0]
        if abs(span - 2 * n * curve.sigma) > 1e-9 * max(1.0, span):
            raise ValueError("curve must be sampled over [0, 2 n sigma]")
    gap = closure_gap(curve)
    if gap > gap_tol:
        raise ValueError(f"curve does not close: gap {gap:.3e} > {gap_tol:.1e}")
    w = curve.turning() / (2.0 * np.pi)
    k = int(round(w))
    if abs(w - k) > 1e-6:
        raise ValueError(f"turning {w} is not an integer multiple of 2 pi")
    return k


def dihedral_axes(curve: PlanarCurve, tol: float = 1e-6) -> tuple[int, float]:
    """Distinct reflection axes of gamma through the origin at v = j sigma.

    Returns (count, worst reflection residual), where the residual compares
    gamma(j sigma + t) with the mirror image of gamma(j sigma - t).
    """
    s = curve.sigma
    dv = curve.v[1] - curve.v[0]
    step = int(round(s / dv))
    if abs(step * dv - s) > 1e-9 * s:
        raise ValueError("sampling must place samples at multiples of sigma")
    nj = int(round((curve.v[-1] - curve.v[0]) / s))
    angles = []
    worst = 0.0
    for j in range(nj):
        i0 = j * step
        pt = curve.xy[i0]
        th = np.arctan2(pt[1], pt[0])
        c, sn = np.cos(2 * th), np.sin(2 * th)
        R = np.array([[c, sn], [sn, -c]])
        lo = max(0, i0 - step)
        hi = min(curve.v.size - 1, i0 + step)
        k = min(i0 - lo, hi - i0)
        if k > 0:
            a = curve.xy[i0 + 1 : i0 + k + 1]
            b = curve.xy[i0 - 1 : i0 - k - 1 if i0 - k - 1 >= 0 else None : -1]
            worst = max(worst, float(np.max(np.abs(a - b @ R.T))))
        angles.append(np.mod(th, np.pi))
    angles = np.sort(np.array(angles))
    distinct = [angles[0]]
    for x in angles[1:]:
        if min(abs(x - distinct[-1]), np.pi - abs(x - distinct[0])) > tol:
            distinct.append(x)
    if len(distinct) > 1 and np.pi - (distinct[-1] - distinct[0]) < tol:
        distinct.pop()
    return len(distinct), worst


def rational_theta(theta: float, max_den: int = 50, gap: float = 1e-7) -> Fraction | None:
    """Best rational approximation with denominator <= max_den if within gap."""
    fr = Fraction(theta).limit_denominator(max_den)
    return fr if abs(float(fr) - theta) < gap else None


def parse_rational(q: str | float | Fraction) -> Fraction:
    """Parse '-3/5' style input; q must be negative with |q| < 1."""
    fr = Fraction(str(q)).limit_denominator(10**6) if not isinstance(q, Fraction) else q
    if not -1 < fr < 0:
        raise ValueError(f"q must lie in (-1, 0), got {fr}")
    return fr
