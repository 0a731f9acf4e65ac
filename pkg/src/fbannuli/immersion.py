"""Realisation of psi(u, v) in M^3(kappa) from the Gauss-Weingarten system.

The frame (psi, psi_u, psi_v, N) is integrated along straight segments of
the (u, v) plane.  Along a segment with direction (du, dv) the state also
carries (alpha, beta, alpha', beta') and (omega, omega_v); omega_u is
recovered from its defining relation 2 omega_u = alpha e^w + beta e^-w and
omega_v is transported by

    omega_vu = (alpha e^w - beta e^-w) omega_v / 2,
    omega_vv = e^{-2w}/4 - kappa e^{2w} - omega_uu,

the last line being the Gauss equation.  Nothing is interpolated from a grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .spaceform import E1, E2, E3, E4, metric_inner, manifold_residual, recenter_isometry, sheet_ok
from .wente_ode import (
    DerivedConstants,
    MetricField,
    ParamTriple,
    derived_constants,
    sigma as sigma_of,
)

__all__ = [
    "FRAME_TOL",
    "FrameCurve",
    "CenterData",
    "SurfaceSolver",
    "initial_frame",
    "integrate_frame",
    "frame_residuals",
    "hopf_residual",
    "m_curve",
    "center_curve",
    "axis_point",
    "BC_constants",
    "gram_condition",
    "check_O_minus",
    "reflection_residual",
    "joachimsthal_spread",
]

FRAME_TOL = 1e-11


def BC_constants(p: ParamTriple) -> tuple[float, float]:
    """m'(0) = B e1 + C e4 in the unrecentred frame."""
    dc = derived_constants(p)
    a, k = p.a, p.kappa
    B = (a - 1.0 / a + dc.B) / 4.0
    C = (4.0 * k * (a - 1.0 / a) - dc.B) / 8.0
    return B, C


def axis_point(p: ParamTriple) -> np.ndarray:
    """Point where the geodesic of the plane P meets the mirror orthogonally.

    -(B e1 + C e4) normalised onto M^3(kappa); requires C^2 + kappa B^2 > 0.
    """
    B, C = BC_constants(p)
    q = C * C + p.kappa * B * B
    if not q > 0.0:
        raise ValueError(f"axis point undefined: C^2 + kappa B^2 = {q:.3e} <= 0")
    pt = -(B * E1 + C * E4) / np.sqrt(q)
    if pt[3] <= 0.0 and p.kappa <= 0.0:
        raise ValueError("axis point lies off the model sheet")
    return pt


def _segment_rhs(ahat: float, kappa: float, du: float, dv: float):
    def rhs(t, y):
        al, be, alp, bep, om, ov = y[0], y[1], y[2], y[3], y[4], y[5]
        F = y[6:].reshape(4, 4)
        psi, pu, pv, nn = F
        e = np.exp(om)
        ei = 1.0 / e
        e2 = e * e
        ou = 0.5 * (al * e + be * ei)
        odd = 0.5 * (al * e - be * ei)
        ouu = 0.5 * (alp * e + bep * ei) + odd * ou
        ovu = odd * ov
        ovv = 0.25 * ei * ei - kappa * e2 - ouu
        out = np.empty_like(y)
        out[0] = du * alp
        out[1] = du * bep
        out[2] = du * (ahat * al - 2.0 * al * al * be - 2.0 * kappa * be)
        out[3] = du * (ahat * be - 2.0 * al * be * be - 0.5 * al)
        out[4] = du * ou + dv * ov
        out[5] = du * ovu + dv * ovv
        dF = out[6:].reshape(4, 4)
        dF[0] = du * pu + dv * pv
        dF[1] = du * (ou * pu - ov * pv + 0.5 * nn - kappa * e2 * psi) + dv * (ov * pu + ou * pv)
        dF[2] = du * (ov * pu + ou * pv) + dv * (-ou * pu + ov * pv - 0.5 * nn - kappa * e2 * psi)
        dF[3] = 0.5 * ei * ei * (dv * pv - du * pu)
        return out

    return rhs


@dataclass
class FrameCurve:
    """Frames sampled along a path; vectors are rows in ambient coordinates."""

    params: ParamTriple
    u: np.ndarray
    v: np.ndarray
    psi: np.ndarray
    psi_u: np.ndarray
    psi_v: np.ndarray
    N: np.ndarray
    omega: np.ndarray
    omega_v: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_p: np.ndarray
    beta_p: np.ndarray
    phi: np.ndarray = field(default_factory=lambda: np.eye(4))

    @property
    def omega_u(self) -> np.ndarray:
        e = np.exp(self.omega)
        return 0.5 * (self.alpha * e + self.beta / e)

    def __len__(self) -> int:
        return self.u.size

    def to_csv(self, path) -> None:
        cols = ["u", "v"] + [f"psi_x{i}" for i in range(1, 5)] + [f"N_x{i}" for i in range(1, 5)]
        data = np.column_stack([self.u, self.v, self.psi, self.N])
        np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")


def _states_to_curve(p: ParamTriple, u, v, Y: np.ndarray, phi: np.ndarray) -> FrameCurve:
    F = Y[6:].T.reshape(-1, 4, 4) @ phi.T
    return FrameCurve(
        p,
        np.asarray(u, dtype=float),
        np.asarray(v, dtype=float),
        F[:, 0].copy(),
        F[:, 1].copy(),
        F[:, 2].copy(),
        F[:, 3].copy(),
        Y[4].copy(),
        Y[5].copy(),
        Y[0].copy(),
        Y[1].copy(),
        Y[2].copy(),
        Y[3].copy(),
        phi,
    )


def _initial_state(p: ParamTriple, dc: DerivedConstants) -> np.ndarray:
    om0 = -np.log(p.a)
    e0 = np.exp(om0)
    F = np.array([E4, e0 * E3, -e0 * E2, E1])
    return np.concatenate([[0.0, 0.0, dc.alpha_p0, dc.beta_p0, om0, 0.0], F.ravel()])


class SurfaceSolver:
    """Frame integration for one parameter triple.

    The u-line through (0, 0) is integrated once with dense output on
    [-u_max, u_max]; any other point is reached from there by a v-segment.
    Frames are computed in the unrecentred normalisation and mapped by the
    recentring isometry afterwards, which is exact because the frame system
    is linear with scalar coefficients.
    """

    def __init__(self, p: ParamTriple, u_max: float = 4.0, tol: float = FRAME_TOL, recentered: bool = False):
        self.params = p
        self.tol = tol
        self.dc = derived_constants(p)
        self.sigma = sigma_of(p)
        self.u_max = float(u_max)
        self.recentered = recentered
        self.y0 = _initial_state(p, self.dc)
        self.phi = np.eye(4)
        if recentered:
            if not check_O_minus(p, solver=self):
                raise ValueError("recentred data requested outside O^-: Gram condition fails")
            self.phi = recenter_isometry(axis_point(p), p.kappa)
        self._u_dense = {}
        for sgn in (1.0, -1.0):
            self._u_dense[sgn] = self._integrate(self.y0, 1.0, 0.0, sgn * self.u_max, dense=True)

    def _integrate(self, y0, du, dv, length, t_eval=None, dense=False):
        rhs = _segment_rhs(self.dc.ahat, self.params.kappa, du, dv)

        def guard(t, y):
            return 50.0 - abs(y[4])

        guard.terminal = True
        sol = solve_ivp(rhs, (0.0, length), y0, method="DOP853", rtol=self.tol, atol=self.tol,
                        t_eval=t_eval, dense_output=dense, events=guard)
        if sol.status == 1:
            raise RuntimeError(f"strip exhausted: |omega| reached the guard at path length {sol.t[-1]:.6g}")
        if not sol.success:
            raise RuntimeError(f"integration failed near path length {sol.t[-1]:.6g} (likely strip exhaustion): {sol.message}")
        return sol

    def state_at_u(self, u) -> np.ndarray:
        """Raw (unrecentred) states on the line v = 0."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any(np.abs(u) > self.u_max + 1e-12):
            raise ValueError("u outside the integrated range; raise u_max")
        out = np.empty((self.y0.size, u.size))
        pos = u >= 0.0
        if np.any(pos):
            out[:, pos] = self._u_dense[1.0].sol(u[pos])
        if np.any(~pos):
            out[:, ~pos] = self._u_dense[-1.0].sol(u[~pos])
        return out

    def u_line(self, u) -> FrameCurve:
        """Frames along v = 0 at the requested u values."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return _states_to_curve(self.params, u, np.zeros_like(u), self.state_at_u(u), self.phi)

    def _v_states(self, u0: float, v) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        y0 = self.state_at_u(u0)[:, 0]
        out = np.empty((y0.size, v.size))
        for sgn in (1.0, -1.0):
            sel = v >= 0.0 if sgn > 0 else v < 0.0
            if not np.any(sel):
                continue
            vv = v[sel]
            order = np.argsort(sgn * vv)
            L = float(np.max(np.abs(vv)))
            if L == 0.0:
                out[:, sel] = y0[:, None]
                continue
            sol = self._integrate(y0, 0.0, sgn, L, t_eval=np.abs(vv[order]))
            tmp = np.empty((y0.size, vv.size))
            tmp[:, order] = sol.y
            out[:, sel] = tmp
        return out

    def v_line(self, u0: float, v) -> FrameCurve:
        """Frames along u = u0 at the requested v values (reached through (u0, 0))."""
        v = np.atleast_1d(np.asarray(v, dtype=float))
        Y = self._v_states(float(u0), v)
        return _states_to_curve(self.params, np.full_like(v, float(u0)), v, Y, self.phi)

    def path(self, vertices, samples_per_segment: int = 20) -> FrameCurve:
        """Frames along a polyline starting at (0, 0)."""
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or np.any(verts[0] != 0.0):
            raise ValueError("path must be an (n, 2) polyline starting at (0, 0)")
        y = self.y0.copy()
        us, vs, Ys = [0.0], [0.0], [y[:, None]]
        for (u0, v0), (u1, v1) in zip(verts[:-1], verts[1:]):
            L = float(np.hypot(u1 - u0, v1 - v0))
            if L == 0.0:
                continue
            du, dv = (u1 - u0) / L, (v1 - v0) / L
            ts = np.linspace(0.0, L, samples_per_segment + 1)[1:]
            sol = self._integrate(y, du, dv, L, t_eval=ts)
            Ys.append(sol.y)
            us.extend(u0 + du * ts)
            vs.extend(v0 + dv * ts)
            y = sol.y[:, -1]
        return _states_to_curve(self.params, np.array(us), np.array(vs), np.hstack(Ys), self.phi)

    def frame_at(self, u: float, v: float, route: str = "uv") -> FrameCurve:
        """Single frame at (u, v) reached by (0,0)->(u,0)->(u,v) or (0,0)->(0,v)->(u,v)."""
        if route == "uv":
            return self.path([[0, 0], [u, 0], [u, v]], 1).take([-1])
        if route == "vu":
            return self.path([[0, 0], [0, v], [u, v]], 1).take([-1])
        raise ValueError("route must be 'uv' or 'vu'")

    def grid(self, u, v) -> dict:
        """psi and N on the tensor grid u x v, arrays of shape (len(u), len(v), 4)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        psi = np.empty((u.size, v.size, 4))
        nn = np.empty_like(psi)
        om = np.empty((u.size, v.size))
        for i, ui in enumerate(u):
            fc = self.v_line(ui, v)
            psi[i], nn[i], om[i] = fc.psi, fc.N, fc.omega
        return {"u": u, "v": v, "psi": psi, "N": nn, "omega": om}


def _take(self: FrameCurve, idx) -> FrameCurve:
    kw = {}
    for name in ("u", "v", "psi", "psi_u", "psi_v", "N", "omega", "omega_v", "alpha", "beta", "alpha_p", "beta_p"):
        kw[name] = getattr(self, name)[idx]
    return FrameCurve(self.params, phi=self.phi, **kw)


FrameCurve.take = _take


def initial_frame(p: ParamTriple, recentered: bool = False) -> FrameCurve:
    """Frame at (u, v) = (0, 0); the recentred variant requires p in O^-."""
    dc = derived_constants(p)
    y = _initial_state(p, dc)[:, None]
    phi = np.eye(4)
    if recentered:
        if not check_O_minus(p):
            raise ValueError("recentred data requested outside O^-: Gram condition fails")
        phi = recenter_isometry(axis_point(p), p.kappa)
    return _states_to_curve(p, [0.0], [0.0], y, phi)


def integrate_frame(
    p: ParamTriple,
    path,
    tol: float = FRAME_TOL,
    field: MetricField | None = None,
    recentered: bool = False,
    samples_per_segment: int = 20,
) -> FrameCurve:
    """Frames along a polyline in (u, v) starting at the origin."""
    verts = np.asarray(path, dtype=float)
    if field is not None and np.any(np.abs(verts[:, 0]) > field.u_strip):
        raise RuntimeError("path leaves the strip reported by the metric field")
    umax = max(1.0, float(np.max(np.abs(verts[:, 0]))))
    solver = SurfaceSolver(p, u_max=umax, tol=tol, recentered=recentered)
    return solver.path(verts, samples_per_segment)


def frame_residuals(fc: FrameCurve) -> dict:
    """Max-norm drift of the frame invariants, with psi_u, psi_v rescaled by e^-omega."""
    k = fc.params.kappa
    ei = np.exp(-fc.omega)[:, None]
    tu, tv, nn, psi = fc.psi_u * ei, fc.psi_v * ei, fc.N, fc.psi
    g = lambda x, y: metric_inner(x, y, k)  # noqa: E731
    out = {
        "manifold": float(np.max(np.abs(manifold_residual(psi, k)))),
        "sheet": bool(np.all(sheet_ok(psi, k))),
        "orthonormality": float(
            np.max(
                np.abs(
                    np.stack(
                        [
                            g(tu, tu) - 1.0,
                            g(tv, tv) - 1.0,
                            g(nn, nn) - 1.0,
                            g(tu, tv),
                            g(tu, nn),
                            g(tv, nn),
                        ]
                    )
                )
            )
        ),
    }
    if k != 0.0:
        s = np.sqrt(abs(k))
        out["psi_normal"] = float(np.max(np.abs(np.stack([s * g(psi, tu), s * g(psi, tv), s * g(psi, nn)]))))
    else:
        out["psi_normal"] = float(np.max(np.abs(np.stack([tu[:, 3], tv[:, 3], nn[:, 3]]))))
    return out


def hopf_residual(solver: SurfaceSolver, points, h: float = 1e-4) -> float:
    """|<psi_zz, N> - 1/4| from centred differences of psi_u and psi_v."""
    worst = 0.0
    k = solver.params.kappa
    for u0, v0 in points:
        cu = solver.v_line(u0 + h, [v0]), solver.v_line(u0 - h, [v0])
        cv = solver.v_line(u0, [v0 + h, v0 - h, v0])
        n = cv.N[2]
        puu = (cu[0].psi_u[0] - cu[1].psi_u[0]) / (2 * h)
        pvv = (cv.psi_v[0] - cv.psi_v[1]) / (2 * h)
        puv = (cv.psi_u[0] - cv.psi_u[1]) / (2 * h)
        re = 0.25 * metric_inner(puu - pvv, n, k)
        im = -0.5 * metric_inner(puv, n, k)
        worst = max(worst, abs(re - 0.25), abs(im))
    return float(worst)


@dataclass
class CenterData:
    """m(u) and, where defined, the sphere centre c(u) of the v-line at u."""

    params: ParamTriple
    u: np.ndarray
    m: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    phi: np.ndarray
    c: np.ndarray | None = None
    is_sphere: np.ndarray | None = None
    eps: np.ndarray | None = None

    def plane_basis(self) -> np.ndarray:
        B, C = BC_constants(self.params)
        return np.stack([self.phi @ E3, self.phi @ (B * E1 + C * E4)])

    def planarity(self) -> float:
        """Largest Euclidean distance of m(u) from span{m(0), m'(0)}."""
        q, _ = np.linalg.qr(self.plane_basis().T)
        r = self.m - (self.m @ q) @ q.T
        return float(np.max(np.linalg.norm(r, axis=1)))


def m_curve(frames: FrameCurve) -> CenterData:
    """m(u) = e^-w psi_u - beta N - (alpha / 2) psi along a curve of frames."""
    ei = np.exp(-frames.omega)[:, None]
    al = frames.alpha[:, None]
    be = frames.beta[:, None]
    m = ei * frames.psi_u - be * frames.N - 0.5 * al * frames.psi
    return CenterData(frames.params, frames.u.copy(), m, frames.alpha.copy(), frames.beta.copy(), frames.phi)


def center_curve(cd: CenterData) -> CenterData:
    """Rescale m(u) to the centre c(u) on M^3(kappa), NaN where Q(u) is not a sphere.

    c = -2 eps m / sqrt(4 kappa (1 + beta^2) + alpha^2) with eps = sgn(alpha).
    """
    k = cd.params.kappa
    D = 4.0 * k * (1.0 + cd.beta**2) + cd.alpha**2
    eps = np.sign(cd.alpha)
    ok = (D > 0.0) & (eps != 0.0)
    c = np.full_like(cd.m, np.nan)
    c[ok] = -2.0 * (eps[ok] / np.sqrt(D[ok]))[:, None] * cd.m[ok]
    return CenterData(cd.params, cd.u, cd.m, cd.alpha, cd.beta, cd.phi, c, ok, eps)


def gram_condition(nu0, nu1, kappa: float) -> bool:
    g00 = metric_inner(nu0, nu0, kappa)
    g11 = metric_inner(nu1, nu1, kappa)
    g01 = metric_inner(nu0, nu1, kappa)
    return bool(g00 * g11 > g01 * g01)


def check_O_minus(p: ParamTriple, solver: SurfaceSolver | None = None) -> bool:
    """Gram condition on nu_j = psi_v(0, j sigma), j = 0, 1, in the unrecentred frame."""
    if solver is None or solver.recentered:
        solver = SurfaceSolver(p, u_max=0.5)
    fc = solver.v_line(0.0, [0.0, solver.sigma])
    nus = fc.psi_v @ np.linalg.inv(fc.phi).T
    return gram_condition(nus[0], nus[1], p.kappa)


def reflection_residual(solver: SurfaceSolver, j: int, u_samples=None) -> float:
    """Residual of the mirror symmetry in x3 and of the plane Omega_j of the u-line v = j sigma.

    (i)  psi(-u, v) equals psi(u, v) with x3 negated;
    (ii) psi(u, j sigma) and psi_u(u, j sigma) are <.,.>_kappa-orthogonal to nu_j.
    """
    if u_samples is None:
        u_samples = np.linspace(0.1, min(1.5, solver.u_max), 6)
    k = solver.params.kappa
    vj = j * solver.sigma
    base = solver.v_line(0.0, [vj])
    nu = base.psi_v[0]
    origin = base.psi[0] if k == 0.0 else np.zeros(4)
    nu = nu / np.sqrt(abs(metric_inner(nu, nu, k)))
    R = np.diag([1.0, 1.0, -1.0, 1.0])
    worst = 0.0
    for u0 in u_samples:
        a = solver.v_line(u0, [vj])
        b = solver.v_line(-u0, [vj])
        worst = max(worst, float(np.max(np.abs(b.psi[0] - R @ a.psi[0]))))
        e = np.exp(-a.omega[0])
        worst = max(worst, abs(metric_inner(a.psi[0] - origin, nu, k)), abs(metric_inner(e * a.psi_u[0], nu, k)))
    return worst


def joachimsthal_spread(solver: SurfaceSolver, u0: float, n: int = 64) -> float:
    """Spread in v of <N, c(u0)>-type angle data along one v-line.

    The intersection angle theta between the surface and Q(u0) satisfies
    beta = -cos(theta)/sin(theta); the v-independence of beta is checked
    through the v-independence of the centre c computed pointwise.
    """
    fc = solver.v_line(u0, np.linspace(0.0, 2.0 * solver.sigma, n))
    cd = center_curve(m_curve(fc))
    if not np.all(cd.is_sphere):
        return float(np.max(np.ptp(cd.m, axis=0)))
    return float(np.max(np.ptp(cd.c, axis=0)))
