"""The ambient model R^4_kappa and the space form M^3(kappa) inside it.

For kappa != 0 the metric is x1 y1 + x2 y2 + x3 y3 + x4 y4 / kappa and
M^3(kappa) is the quadric kappa (x1^2 + x2^2 + x3^2) + x4^2 = 1 (the sheet
x4 > 0 when kappa < 0).  For kappa = 0 the metric is the Euclidean one and
M^3(0) is the affine hyperplane x4 = 1.  Every function keeps an explicit
kappa = 0 branch instead of relying on small-kappa limits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "E1",
    "E2",
    "E3",
    "E4",
    "UmbilicalSurface",
    "check_curvature",
    "metric_inner",
    "metric_matrix",
    "manifold_residual",
    "sheet_ok",
    "stereographic",
    "stereographic_jacobian",
    "sphere_test",
    "recenter_isometry",
    "to_h3",
    "to_poincare",
    "h3_residual",
    "tangent_projection",
]

E1 = np.array([1.0, 0.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0, 0.0])
E4 = np.array([0.0, 0.0, 0.0, 1.0])


def check_curvature(kappa: float) -> float:
    """Return kappa as float after checking the working range 4|kappa| < 1."""
    kappa = float(kappa)
    if not np.isfinite(kappa) or 4.0 * abs(kappa) >= 1.0:
        raise ValueError(f"curvature {kappa!r} outside the range 4|kappa| < 1")
    return kappa


def _weight(kappa: float) -> float:
    return 1.0 if kappa == 0.0 else 1.0 / kappa


def metric_matrix(kappa: float) -> np.ndarray:
    """Diagonal Gram matrix of <.,.>_kappa."""
    return np.diag([1.0, 1.0, 1.0, _weight(kappa)])


def metric_inner(x, y, kappa: float):
    """<x, y>_kappa; works on the last axis so arrays of vectors broadcast."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = _weight(kappa)
    return x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1] + x[..., 2] * y[..., 2] + w * x[..., 3] * y[..., 3]


def manifold_residual(x, kappa: float):
    """Zero exactly on M^3(kappa) (sheet condition is checked by sheet_ok)."""
    x = np.asarray(x, dtype=float)
    if kappa == 0.0:
        return x[..., 3] - 1.0
    return kappa * (x[..., 0] ** 2 + x[..., 1] ** 2 + x[..., 2] ** 2) + x[..., 3] ** 2 - 1.0


def sheet_ok(x, kappa: float):
    """For kappa < 0 only the upper sheet x4 > 0 belongs to the model."""
    x = np.asarray(x, dtype=float)
    if kappa < 0.0:
        return x[..., 3] > 0.0
    return np.ones(x.shape[:-1], dtype=bool)


@dataclass(frozen=True)
class UmbilicalSurface:
    """S[m, d] = {x in M^3(kappa) : <x, m>_kappa = d}; B[m, d] is the side >= d."""

    m: np.ndarray
    d: float

    def nonempty_condition(self, kappa: float) -> float:
        return float(metric_inner(self.m, self.m, kappa) - kappa * self.d**2)

    def level(self, x, kappa: float):
        return metric_inner(x, self.m, kappa) - self.d


def sphere_test(kappa: float, alpha: float, beta: float) -> bool:
    """Q(u) is a round 2-sphere iff 4 kappa (1 + beta^2) + alpha^2 > 0."""
    return bool(4.0 * kappa * (1.0 + beta * beta) + alpha * alpha > 0.0)


def stereographic(x, kappa: float | None = None) -> np.ndarray:
    """Projection from -e4: (2x1, 2x2, 2x3) / (x4 + 1).

    For kappa = 0 this is (x1, x2, x3) on the hyperplane x4 = 1.  The kappa
    argument is accepted for symmetry with the other maps; the formula does
    not depend on it.
    """
    x = np.asarray(x, dtype=float)
    den = x[..., 3] + 1.0
    if np.any(den <= 0.0):
        raise ValueError("stereographic projection needs x4 > -1")
    return 2.0 * x[..., :3] / den[..., None]


def stereographic_jacobian(x, dx) -> np.ndarray:
    """Differential of the stereographic map at x applied to dx."""
    x = np.asarray(x, dtype=float)
    dx = np.asarray(dx, dtype=float)
    den = x[..., 3] + 1.0
    return 2.0 * dx[..., :3] / den[..., None] - 2.0 * x[..., :3] * (dx[..., 3] / den**2)[..., None]


def recenter_isometry(p, kappa: float, tol: float = 1e-9) -> np.ndarray:
    """Linear isometry of R^4_kappa fixing x2, x3 and sending p to e4.

    With p = (s, 0, 0, c) the map is x1' = c x1 - s x4, x4' = kappa s x1 + c x4.
    It is a rotation for kappa > 0, a boost for kappa < 0 and the chart
    translation x1 -> x1 - s for kappa = 0; the same matrix covers all cases.
    """
    p = np.asarray(p, dtype=float)
    if abs(p[1]) > tol or abs(p[2]) > tol:
        raise ValueError("recentering point must satisfy x2 = x3 = 0")
    if abs(manifold_residual(p, kappa)) > tol:
        raise ValueError("recentering point is not on M^3(kappa)")
    s, c = p[0], p[3]
    if kappa <= 0.0 and c <= 0.0:
        raise ValueError("recentering point must have x4 > 0 for kappa <= 0")
    phi = np.eye(4)
    phi[0, 0] = c
    phi[0, 3] = -s
    phi[3, 0] = kappa * s
    phi[3, 3] = c
    return phi


def tangent_projection(w, x, kappa: float) -> np.ndarray:
    """Component of w tangent to M^3(kappa) at x (w minus its normal part)."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if kappa == 0.0:
        out = np.array(w, dtype=float, copy=True)
        out[..., 3] = 0.0
        return out
    return w - (kappa * metric_inner(w, x, kappa))[..., None] * x


def to_h3(x, kappa: float) -> np.ndarray:
    """Map M^3(kappa), kappa < 0, onto the unit hyperboloid x1^2+x2^2+x3^2-x4^2 = -1."""
    if kappa >= 0.0:
        raise ValueError("to_h3 requires kappa < 0")
    x = np.array(x, dtype=float, copy=True)
    x[..., :3] *= np.sqrt(-kappa)
    return x


def h3_residual(y):
    y = np.asarray(y, dtype=float)
    return y[..., 0] ** 2 + y[..., 1] ** 2 + y[..., 2] ** 2 - y[..., 3] ** 2 + 1.0


def to_poincare(y) -> np.ndarray:
    """Poincare ball coordinates of a point of the unit hyperboloid."""
    y = np.asarray(y, dtype=float)
    return y[..., :3] / (1.0 + y[..., 3])[..., None]
