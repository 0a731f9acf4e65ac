"""Searches in parameter space for free boundary annuli.

Pipeline: f^(b, kappa) = tau(1, b, kappa) - u~(kappa) vanishes on the curve
mu through (b0, 0); along mu the period Theta(1, b_mu, kappa) sweeps an
interval J.  For q in J the rotational solution at kappa* is the start of a
branch G(a, kappa) = 0 of non-rotational solutions with Theta = q, where
G(a, kappa) = h(a, b_q(a, kappa), kappa) and h is the height of the centre
of the boundary sphere.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import __version__
from .catenoid import hat_p, profile, u_tilde
from .hamilton import tau_info
from .immersion import FRAME_TOL, SurfaceSolver, center_curve, m_curve
from .period import b_level, b_solve, closure_gap, dihedral_axes, gamma_curve, parse_rational, rotation_index, \
    theta_closed_form
from .spaceform import E4, metric_inner, to_h3, to_poincare, h3_residual
from .wente_ode import ParamTriple

__all__ = [
    "THRESHOLDS",
    "CERT_TOL",
    "LevelCurvePoint",
    "AnnulusCertificate",
    "CertificateRefused",
    "QOutsideJ",
    "u_tilde_cached",
    "f_hat",
    "find_b0",
    "B0Result",
    "mu_curve",
    "J_interval",
    "height_map",
    "g_kappa",
    "g_tilde",
    "kappa_star",
    "G_map",
    "branch_continue",
    "assemble_annulus",
    "export_h3",
    "write_obj",
    "candidate_rationals",
]

THRESHOLDS = {
    "orthogonality": 1e-5,
    "sphere_gap": 1e-6,
    "closure": 1e-6,
    "symmetry": 1e-5,
    "theta": 1e-8,
    "height": 1e-7,
    "beta_tau": 1e-9,
}


# certificates integrate frames one decade tighter than FRAME_TOL so the
# closure residual sits well below its 1e-6 threshold
CERT_TOL = 1e-12


class QOutsideJ(ValueError):
    """The requested period lies outside the computed interval J."""


class CertificateRefused(RuntimeError):
    def __init__(self, clause: str, report: dict):
        super().__init__(f"certificate refused: {clause}")
        self.clause = clause
        self.report = report


@lru_cache(maxsize=512)
def u_tilde_cached(kappa: float) -> float:
    return u_tilde(kappa)


def f_hat(b: float, kappa: float) -> float:
    """tau(1, b, kappa) - u~(kappa)."""
    return tau_info(ParamTriple(1.0, b, kappa)).tau - u_tilde_cached(kappa)


@dataclass
class B0Result:
    b0: float
    residual: float
    table: list


def find_b0(xtol: float = 1e-14) -> B0Result:
    """Root of f^(., 0) in (1, 2): f^(1, 0) > 0 and tau -> 0 as b -> 2-."""
    lo, hi = 1.0, 1.999
    flo, fhi = f_hat(lo, 0.0), f_hat(hi, 0.0)
    if not (flo > 0.0 > fhi):
        raise RuntimeError(f"f^ does not change sign on [{lo}, {hi}]: {flo}, {fhi}")
    b0 = float(brentq(lambda b: f_hat(b, 0.0), lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))
    table = [(float(b), f_hat(float(b), 0.0)) for b in (1.0, b0 - 0.05, b0, b0 + 0.05, 1.999)]
    return B0Result(b0, f_hat(b0, 0.0), table)


@dataclass
class LevelCurvePoint:
    a: float
    b: float
    kappa: float
    tau: float
    theta: float
    height: float = float("nan")
    fhat: float = float("nan")
    eta: float = 0.0

    def params(self) -> ParamTriple:
        return ParamTriple(self.a, self.b, self.kappa)

    def to_dict(self) -> dict:
        return asdict(self)


def _root_in_b(kappa: float, guess: float, width: float = 0.02) -> float:
    lo_b = max(1.0, -4.0 * kappa) + 1e-12
    f = lambda b: f_hat(b, kappa)  # noqa: E731
    lo, hi = max(lo_b, guess - width), guess + width
    flo, fhi = f(lo), f(hi)
    for _ in range(8):
        if flo > 0.0 > fhi:
            return float(brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))
        if flo <= 0.0:
            if lo <= lo_b:
                break
            lo, flo = max(lo_b, lo - width), None
            flo = f(lo)
        if fhi >= 0.0:
            hi += width
            fhi = f(hi)
        width *= 2.0
    raise RuntimeError(f"no sign change of f^ in b near {guess} at kappa={kappa}")


def mu_curve(kappa_min: float = -0.245, step: float = 0.005, b0: float | None = None) -> tuple[list, dict]:
    """Continuation of f^(b, kappa) = 0 from (b0, 0) towards kappa_min.

    Uses a secant predictor in kappa and a bracketed Brent corrector in b.
    Returns the accepted points and a status record with the reached extent.
    """
    b0 = find_b0().b0 if b0 is None else b0
    pts = [LevelCurvePoint(1.0, b0, 0.0, tau_info(ParamTriple(1, b0, 0.0)).tau, theta_closed_form(b0, 0.0),
                           fhat=f_hat(b0, 0.0))]
    status = {"reached_kappa": 0.0, "stopped": "kappa_min"}
    k = 0.0
    while k - step >= kappa_min - 1e-15:
        k = round(k - step, 12)
        if len(pts) >= 2:
            guess = 2 * pts[-1].b - pts[-2].b
        else:
            guess = pts[-1].b
        try:
            b = _root_in_b(k, guess, width=max(0.002, abs(pts[-1].b - (pts[-2].b if len(pts) > 1 else b0)) + 1e-3))
            ti = tau_info(ParamTriple(1.0, b, k))
        except (RuntimeError, ValueError) as exc:
            status = {"reached_kappa": pts[-1].kappa, "stopped": f"continuation failure: {exc}"}
            break
        pts.append(LevelCurvePoint(1.0, b, k, ti.tau, theta_closed_form(b, k), fhat=f_hat(b, k)))
        status["reached_kappa"] = k
    return pts, status


def J_interval(mu: list) -> tuple[float, float]:
    th = [p.theta for p in mu]
    return float(min(th)), float(max(th))


def candidate_rationals(J: tuple[float, float], max_den: int = 7) -> list[Fraction]:
    """q = -m/n in the open interval J with n <= max_den, in lowest terms."""
    out = set()
    for n in range(1, max_den + 1):
        for m in range(1, n):
            fr = Fraction(-m, n)
            if J[0] < fr < J[1]:
                out.add(fr)
    return sorted(out)


def _solver_for(p: ParamTriple, u_need: float, tol: float = FRAME_TOL) -> SurfaceSolver:
    # tight margin: near the end of mu, tau sits just inside the strip
    return SurfaceSolver(p, u_max=u_need * 1.005 + 1e-6, tol=tol, recentered=True)


def height_map(p: ParamTriple, tol: float = FRAME_TOL, return_all: bool = False):
    """h = third coordinate of the recentred sphere centre c(tau)."""
    ti = tau_info(p)
    solver = _solver_for(p, ti.tau, tol)
    cd = center_curve(m_curve(solver.u_line([ti.tau])))
    if not cd.is_sphere[0]:
        raise ValueError("Q(tau) is not a round sphere; the height is undefined")
    h = float(cd.c[0, 2])
    if return_all:
        return h, ti, cd.c[0]
    return h


def g_kappa(q: float, kappa: float) -> float:
    """g(kappa) = f^(b_q(1, kappa), kappa)."""
    return f_hat(b_level(q, kappa), kappa)


def g_tilde(q: float, kappa: float) -> float:
    """h(1, b_q(1, kappa), kappa)."""
    return height_map(ParamTriple(1.0, b_level(q, kappa), kappa))


def kappa_star(q, mu: list | None = None) -> float:
    """kappa* < 0 with b_q(1, kappa*) on mu, found as a bracketed root of g."""
    q = float(parse_rational(q))
    if mu is None:
        mu, _ = mu_curve()
    J = J_interval(mu)
    if not J[0] < q < J[1]:
        raise QOutsideJ(f"q outside computed 𝒥 = ({J[0]:.9f}, {J[1]:.9f})")
    # f^ decreases in b across mu, so sign g = sign(b_mu - b_q)
    sgn = []
    for pt in mu:
        try:
            sgn.append(np.sign(pt.b - b_level(q, pt.kappa)))
        except ValueError:
            sgn.append(np.nan)
    for i in range(len(mu) - 1):
        if sgn[i] * sgn[i + 1] < 0:
            k0, k1 = mu[i].kappa, mu[i + 1].kappa
            if not np.sign(g_kappa(q, k0)) != np.sign(g_kappa(q, k1)):
                continue
            return float(brentq(lambda k: g_kappa(q, k), min(k0, k1), max(k0, k1), xtol=1e-14,
                                rtol=4 * np.finfo(float).eps))
    raise QOutsideJ("no sign change of g along the computed mu curve")


@dataclass
class _GEval:
    a: float
    kappa: float
    b: float
    G: float
    tau: float
    theta_gap: float


def G_map(a: float, kappa: float, q: float, b_seed: float | None = None) -> _GEval:
    """G(a, kappa) = h(a, b_q(a, kappa), kappa) with the inner solve Theta = q in b."""
    b = b_solve(q, a, kappa, seed=b_seed) if a != 1.0 else b_level(q, kappa)
    p = ParamTriple(a, b, kappa)
    h, ti, _ = height_map(p, return_all=True)
    from .period import period_theta

    gap = abs(period_theta(p) - q)
    return _GEval(a, kappa, b, h, ti.tau, gap)


def branch_continue(q, n_points: int = 4, step: float = 0.02, kappa_start: float | None = None,
                    mu: list | None = None, fd: float = 1e-5) -> tuple[list, dict]:
    """Pseudo-arclength continuation of G = 0 in (a, kappa) from (1, kappa*).

    Predictor: unit tangent orthogonal to a finite-difference gradient of G,
    oriented towards a > 1.  Corrector: Brent along the gradient direction
    through the predicted point.  The parameter eta is arc length in (a, kappa).
    """
    qf = float(parse_rational(q))
    ks = kappa_start if kappa_start is not None else kappa_star(qf, mu)
    base = G_map(1.0, ks, qf)
    pts = [LevelCurvePoint(1.0, base.b, ks, base.tau, qf, base.G, eta=0.0)]
    status = {"points": 1, "stopped": "n_points", "eta": 0.0}
    x = np.array([1.0, ks])
    b_prev = base.b
    prev_t = None
    eta = 0.0

    def Gv(y, seed):
        return G_map(float(y[0]), float(y[1]), qf, seed)

    for _ in range(n_points):
        try:
            # one-sided differences in a at the a = 1 boundary
            ga = (Gv(x + [fd, 0.0], b_prev).G - Gv(x, b_prev).G) / fd
            gk = (Gv(x + [0.0, fd], b_prev).G - Gv(x - [0.0, fd], b_prev).G) / (2 * fd)
            grad = np.array([ga, gk])
            nrm = np.linalg.norm(grad)
            if nrm == 0.0:
                raise RuntimeError("vanishing gradient of G")
            t = np.array([-grad[1], grad[0]]) / nrm
            if prev_t is not None:
                if t @ prev_t < 0:
                    t = -t
            elif t[0] < 0:
                t = -t
            y = x + step * t
            nvec = grad / nrm
            cache = {}

            def along(s):
                if s not in cache:
                    ev = Gv(y + s * nvec, b_prev)
                    cache[s] = ev
                return cache[s].G

            s_lo, s_hi = -0.25 * step, 0.25 * step
            f_lo, f_hi = along(s_lo), along(s_hi)
            grow = 0
            while f_lo * f_hi > 0 and grow < 4:
                s_lo, s_hi = 2 * s_lo, 2 * s_hi
                f_lo, f_hi = along(s_lo), along(s_hi)
                grow += 1
            if f_lo * f_hi > 0:
                raise RuntimeError("corrector could not bracket G = 0")
            s = brentq(along, s_lo, s_hi, xtol=1e-12)
            ev = Gv(y + s * nvec, b_prev)
            if ev.a <= 1.0 or ev.kappa >= 0.0:
                raise RuntimeError(f"branch left the region a > 1, kappa < 0 at ({ev.a}, {ev.kappa})")
            if abs(ev.G) > THRESHOLDS["height"] or ev.theta_gap > THRESHOLDS["theta"]:
                raise RuntimeError(f"corrector residuals too large: G={ev.G:.2e}, theta gap={ev.theta_gap:.2e}")
        except (RuntimeError, ValueError) as exc:
            status["stopped"] = f"branch termination: {exc}"
            break
        xn = np.array([ev.a, ev.kappa])
        eta += float(np.linalg.norm(xn - x))
        prev_t = t
        x = xn
        b_prev = ev.b
        pts.append(LevelCurvePoint(ev.a, ev.b, ev.kappa, ev.tau, qf + 0.0, ev.G, eta=eta))
        status.update(points=len(pts), eta=eta)
    return pts, status


@dataclass
class AnnulusCertificate:
    q: str
    m: int
    n: int
    eta: float
    a: float
    b: float
    kappa: float
    tau: float
    sigma: float
    theta: float
    ball: dict
    residuals: dict
    symmetry_order: int
    thresholds: dict = field(default_factory=lambda: dict(THRESHOLDS))
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)


def _sphere_normal(psi, c, kappa):
    if kappa == 0.0:
        w = psi - c
        w[..., 3] = 0.0
        return w
    return c - (kappa * metric_inner(c, psi, kappa))[..., None] * psi


def _orth_deviation(fc, c, kappa) -> float:
    w = _sphere_normal(fc.psi, c, kappa)
    nn = fc.N
    cosang = metric_inner(nn, w, kappa) / np.sqrt(metric_inner(nn, nn, kappa) * metric_inner(w, w, kappa))
    return float(np.max(np.abs(np.arcsin(np.clip(cosang, -1.0, 1.0)))))


def _distance_from_e4(x, kappa):
    if kappa == 0.0:
        return np.linalg.norm(x[..., :3], axis=-1)
    if kappa < 0.0:
        return np.arccosh(np.maximum(x[..., 3], 1.0)) / np.sqrt(-kappa)
    return np.arccos(np.clip(x[..., 3], -1.0, 1.0)) / np.sqrt(kappa)


def assemble_annulus(pt: LevelCurvePoint, q, n_u: int = 21, n_v_per_2sigma: int = 64,
                     thresholds: dict | None = None, tol: float = CERT_TOL) -> AnnulusCertificate:
    """Build and check the certificate of a free boundary annulus at a branch point."""
    thr = dict(THRESHOLDS)
    if thresholds:
        thr.update(thresholds)
    qf = parse_rational(q)
    m, n = -qf.numerator, qf.denominator
    p = pt.params()
    k = p.kappa
    ti = tau_info(p)
    t = ti.tau
    solver = _solver_for(p, t, tol)
    s = solver.sigma
    nv = n_v_per_2sigma * n + 1
    v = np.linspace(0.0, 2 * n * s, nv)
    rep: dict = {"beta_tau": abs(ti.beta)}

    # boundary v-lines: orthogonality, spheres, levels
    bnd = {}
    for sg in (1.0, -1.0):
        fc = solver.v_line(sg * t, v)
        cd = center_curve(m_curve(fc))
        if not np.all(cd.is_sphere):
            raise CertificateRefused("Q(tau) is not a round sphere", rep)
        c = cd.c.mean(axis=0)
        rep[f"center_spread_{'+' if sg > 0 else '-'}"] = float(np.max(np.ptp(cd.c, axis=0)))
        bnd[sg] = (fc, c)
    rep["orthogonality"] = max(_orth_deviation(bnd[sg][0], bnd[sg][1], k) for sg in bnd)
    lev = {sg: float(np.mean(metric_inner(bnd[sg][0].psi, E4, k))) if k != 0.0 else
           float(np.mean(np.linalg.norm(bnd[sg][0].psi[:, :3], axis=1))) for sg in bnd}
    rep["sphere_gap"] = float(max(np.max(np.abs(bnd[1.0][1] - E4)), np.max(np.abs(bnd[-1.0][1] - E4)),
                                  abs(lev[1.0] - lev[-1.0])))
    dist_b = np.concatenate([_distance_from_e4(bnd[sg][0].psi, k) for sg in bnd])
    R = float(np.mean(dist_b))
    rep["boundary_radius_spread"] = float(np.ptp(dist_b))

    # interior samples: containment and closure
    uu = np.linspace(-t, t, n_u)
    grid = solver.grid(uu, v)
    psi = grid["psi"]
    inner = _distance_from_e4(psi[1:-1], k)
    rep["containment_margin"] = float(R - np.max(inner))
    rep["closure"] = float(np.max(np.abs(psi[:, -1] - psi[:, 0])))

    # rotation index of the planar geodesic
    curve = gamma_curve(p, 2 * n, solver=solver)
    rep["gamma_closure"] = closure_gap(curve)
    theta = curve.turning() / (2 * n * np.pi)
    rep["theta_gap"] = abs(theta - float(qf))
    try:
        rep["rotation_index"] = rotation_index(curve, n, gap_tol=thr["closure"])
    except ValueError as exc:
        raise CertificateRefused(f"rotation index: {exc}", rep) from exc
    axes, refl = dihedral_axes(curve)
    rep["dihedral_axes"] = axes
    rep["dihedral_reflection"] = refl

    # mesh symmetries: mirror x3 and the n-fold rotation / reflections in (x1, x2)
    R3 = np.diag([1.0, 1.0, -1.0, 1.0])
    mirror = float(np.max(np.abs(psi[::-1] - psi @ R3.T)))
    step2 = n_v_per_2sigma
    ang = 2 * np.pi * float(qf) * 1.0
    c_, s_ = np.cos(ang), np.sin(ang)
    Rot = np.array([[c_, -s_, 0, 0], [s_, c_, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    rot = float(np.max(np.abs(psi[:, step2:] - psi[:, :-step2] @ Rot.T)))
    R2 = np.diag([1.0, -1.0, 1.0, 1.0])
    refl_v = float(np.max(np.abs(psi[:, ::-1] - psi @ R2.T)))
    rep["mirror"] = mirror
    rep["rotation_symmetry"] = rot
    rep["reflection_symmetry"] = refl_v
    sym = max(mirror, rot, refl_v)
    order = 4 * n if sym < thr["symmetry"] and axes == n else 0

    ball = {"center": [0.0, 0.0, 0.0, 1.0], "geodesic_radius": R}
    if k != 0.0:
        ball["level"] = float(0.5 * (lev[1.0] + lev[-1.0]))
    else:
        ball["radius"] = R

    cert = AnnulusCertificate(f"{-m}/{n}", m, n, pt.eta, p.a, p.b, k, t, s, theta, ball, rep, order, thr)
    checks = [
        ("beta(tau) orthogonality hypothesis", rep["beta_tau"] < thr["beta_tau"]),
        ("orthogonality angle", rep["orthogonality"] < thr["orthogonality"]),
        ("sphere coincidence at e4", rep["sphere_gap"] < thr["sphere_gap"]),
        ("closure", rep["closure"] < thr["closure"]),
        ("rotation index", rep["rotation_index"] == -m),
        ("containment", rep["containment_margin"] > 0.0),
        ("symmetry", sym < thr["symmetry"] and axes == n),
        ("ambient curvature", k < 0.0 and p.a >= 1.0),
    ]
    for name, ok in checks:
        if not ok:
            raise CertificateRefused(name, rep)
    return cert


def export_h3(cert: AnnulusCertificate, grid: tuple[int, int] = (21, 0), tol: float = CERT_TOL) -> dict:
    """Vertex grid on [-tau, tau] x [0, 2 n sigma) mapped to the hyperboloid and the Poincare ball."""
    if cert.kappa >= 0.0:
        raise ValueError("export to H^3 needs kappa < 0")
    n_u, n_v = grid
    if n_v <= 0:
        n_v = 32 * cert.n
    p = ParamTriple(cert.a, cert.b, cert.kappa)
    solver = _solver_for(p, cert.tau, tol)
    u = np.linspace(-cert.tau, cert.tau, n_u)
    v = np.linspace(0.0, 2 * cert.n * cert.sigma, n_v + 1)
    g = solver.grid(u, v)
    psi = g["psi"][:, :-1]
    raw = to_h3(psi, cert.kappa)
    # integration drift grows with x4 (about 25 at the boundary); vertices are
    # pushed back onto the hyperboloid along x4 and the raw drift is reported
    h3 = raw.copy()
    h3[..., 3] = np.sqrt(1.0 + np.sum(raw[..., :3] ** 2, axis=-1))
    pb = to_poincare(h3)
    faces = []
    for i in range(n_u - 1):
        for j in range(n_v):
            a0 = i * n_v + j
            a1 = i * n_v + (j + 1) % n_v
            b0 = (i + 1) * n_v + j
            b1 = (i + 1) * n_v + (j + 1) % n_v
            faces.append((a0, b0, b1))
            faces.append((a0, b1, a1))
    dist = np.arccosh(np.maximum(h3[..., 3], 1.0))
    return {
        "u": u,
        "v": v[:-1],
        "h3": h3.reshape(-1, 4),
        "poincare": pb.reshape(-1, 3),
        "faces": np.array(faces, dtype=int),
        "h3_residual": float(np.max(np.abs(h3_residual(h3)))),
        "h3_residual_raw": float(np.max(np.abs(h3_residual(raw)))),
        "h3_residual_raw_relative": float(np.max(np.abs(h3_residual(raw)) / raw[..., 3] ** 2)),
        "ball_h3_radius": float(cert.ball["geodesic_radius"] * np.sqrt(-cert.kappa)),
        "boundary_radius_gap": float(np.max(np.abs(dist[[0, -1]] - cert.ball["geodesic_radius"]
                                                   * np.sqrt(-cert.kappa)))),
    }


def write_obj(path, vertices: np.ndarray, faces: np.ndarray, header: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        for x in vertices:
            fh.write("v " + " ".join(f"{c:.17g}" for c in x) + "\n")
        for f in faces:
            fh.write("f " + " ".join(str(i + 1) for i in f) + "\n")
