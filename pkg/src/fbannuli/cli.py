"""Command line interface.

Exit codes: 0 success, 1 numerical failure (with diagnostics on stderr),
2 usage error.  A JSON config file supplies defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .io import dumps17, fmt, manifest, write_csv, write_json

__all__ = ["main", "build_parser", "load_config", "sweep", "sweep_point", "pool_size"]

DEFAULTS = {
    "a": 1.0,
    "b": 1.0,
    "kappa": 0.0,
    "q": None,
    "tol": 1e-11,
    "grid_u": 41,
    "grid_v": 256,
    "out": None,
    "u_max": 2.0,
    "kappa_min": -0.245,
    "kappa_max": 0.2,
    "steps": 9,
    "mu_step": 0.01,
    "points": 3,
    "step": 0.02,
    "a_range": [1.0, 1.3],
    "b_range": [1.0, 2.0],
    "kappa_range": [-0.2, 0.2],
    "n_a": 3,
    "n_b": 3,
    "n_kappa": 3,
}


class UsageError(Exception):
    pass


def pool_size() -> int:
    env = os.environ.get("FBMA_THREADS")
    cpu = os.cpu_count() or 1
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise UsageError(f"FBMA_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise UsageError("FBMA_THREADS must be >= 1")
        return min(n, cpu)
    return cpu


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(load_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["tol"] is not None and not cfg["tol"] > 0:
        raise UsageError("--tol must be positive")
    for key in ("grid_u", "grid_v"):
        if int(cfg[key]) < 3:
            raise UsageError(f"--{key.replace('_', '-')} must be >= 3")
    return cfg


def _params(cfg):
    from .wente_ode import ParamTriple

    try:
        return ParamTriple(cfg["a"], cfg["b"], cfg["kappa"])
    except ValueError as exc:
        raise UsageError(f"parameters outside O: {exc}") from exc


def _outdir(cfg) -> Path | None:
    if cfg["out"] is None:
        return None
    d = Path(cfg["out"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _q(cfg):
    from .period import parse_rational

    if cfg["q"] is None:
        raise UsageError("--q is required")
    try:
        return parse_rational(cfg["q"])
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"invalid --q: {exc}") from exc


def _emit(obj) -> None:
    sys.stdout.write(dumps17(obj))


def cmd_solve(cfg) -> int:
    from .wente_ode import omega_field, save_field, sigma, integrate_alphabeta, trajectory_to_csv

    p = _params(cfg)
    s = sigma(p)
    v = np.linspace(0.0, 2 * s, int(cfg["grid_v"]))
    fld = omega_field(p, float(cfg["u_max"]), v, cfg["tol"], n_u=int(cfg["grid_u"]))
    rep = {
        "sigma": s,
        "u_strip": fld.u_strip,
        "strip_exhausted": fld.strip_exhausted,
        "gauss_residual": fld.gauss_residual(),
        "phi_residual": fld.phi_residual,
    }
    _emit(rep)
    d = _outdir(cfg)
    if d:
        save_field(fld, d / "omega_field")
        traj = integrate_alphabeta(p, min(float(cfg["u_max"]), fld.u_strip), cfg["tol"])
        trajectory_to_csv(traj, d / "alphabeta.csv")
        write_json(d / "solve.json", {"manifest": manifest("solve", cfg), "report": rep})
    return 0


def cmd_immerse(cfg) -> int:
    from .immersion import SurfaceSolver, check_O_minus, frame_residuals, m_curve

    p = _params(cfg)
    um = float(cfg["u_max"])
    solver = SurfaceSolver(p, u_max=um, tol=cfg["tol"], recentered=False)
    ul = solver.u_line(np.linspace(-um, um, int(cfg["grid_u"])))
    vl = solver.v_line(0.0, np.linspace(0.0, 2 * solver.sigma, int(cfg["grid_v"])))
    rep = {
        "sigma": solver.sigma,
        "O_minus": check_O_minus(p, solver),
        "u_line": frame_residuals(ul),
        "v_line": frame_residuals(vl),
        "m_planarity": m_curve(ul).planarity(),
    }
    _emit(rep)
    d = _outdir(cfg)
    if d:
        ul.to_csv(d / "frames_u.csv")
        vl.to_csv(d / "frames_v.csv")
        write_json(d / "immerse.json", {"manifest": manifest("immerse", cfg), "report": rep})
    return 0


def cmd_period(cfg) -> int:
    from .period import closure_gap, gamma_curve, rational_theta, theta_closed_form

    p = _params(cfg)
    curve = gamma_curve(p, 2, tol=cfg["tol"])
    n = curve.v.size
    th = (curve.angle[(n - 1) // 2] - curve.angle[0]) / np.pi
    rep = {"theta": th, "sigma": curve.sigma, "closure_gap_2sigma": closure_gap(curve)}
    if p.a == 1.0:
        cf = theta_closed_form(p.b, p.kappa)
        rep["closed_form"] = cf
        rep["closed_form_gap"] = abs(th - cf)
    r = rational_theta(th)
    rep["rational"] = None if r is None else f"{r.numerator}/{r.denominator}"
    _emit(rep)
    d = _outdir(cfg)
    if d:
        curve.to_csv(d / "gamma.csv")
        write_json(d / "period.json", {"manifest": manifest("period", cfg), "report": rep})
    return 0


def cmd_tau(cfg) -> int:
    from .hamilton import cubic_roots, periods_MN, tau_info, u1

    p = _params(cfg)
    ti = tau_info(p)
    rep = {"tau": ti.tau, "alpha_tau": ti.alpha, "beta_tau": ti.beta, "beta_p_tau": ti.beta_p}
    if p.kappa >= 0.0:
        cd = cubic_roots(p)
        rep["roots"] = [cd.r1, cd.r2, cd.r3]
        if p.kappa > 0.0 or p.a > 1.0:
            rep["u1"] = u1(p)
        if p.kappa > 0.0:
            M, N = periods_MN(p)
            rep["M"] = M
            rep["N"] = N
    _emit(rep)
    d = _outdir(cfg)
    if d:
        write_json(d / "tau.json", {"manifest": manifest("tau", cfg), "report": rep})
    return 0


def cmd_catenoid_table(cfg) -> int:
    from .catenoid import fb_ball, u_tilde

    ks = np.linspace(float(cfg["kappa_min"]), float(cfg["kappa_max"]), int(cfg["steps"]))
    rows = []
    for k in ks:
        k = float(k)
        ball = fb_ball(k)
        rows.append((k, ball.s_tilde, u_tilde(k), ball.level, ball.radius, ball.geodesic_radius))
    header = ["kappa", "s_tilde", "u_tilde", "ball_level", "ball_radius", "geodesic_radius"]
    sys.stdout.write(",".join(header) + "\n")
    for r in rows:
        sys.stdout.write(",".join("" if x is None else fmt(x) for x in r) + "\n")
    d = _outdir(cfg)
    if d:
        write_csv(d / "catenoid_table.csv", header, rows)
        write_json(d / "catenoid_table.manifest.json", manifest("catenoid-table", cfg))
    return 0


def cmd_find_b0(cfg) -> int:
    from .fbsearch import find_b0

    r = find_b0()
    _emit({"b0": r.b0, "f_hat_b0": r.residual, "table": [{"b": b, "f_hat": f} for b, f in r.table]})
    d = _outdir(cfg)
    if d:
        write_json(d / "b0.json", {"manifest": manifest("find-b0", cfg), "b0": r.b0, "table": r.table})
    return 0


def _mu(cfg):
    from .fbsearch import mu_curve

    return mu_curve(float(cfg["kappa_min"]), float(cfg["mu_step"]))


def cmd_mu(cfg) -> int:
    from .fbsearch import J_interval, candidate_rationals

    pts, status = _mu(cfg)
    J = J_interval(pts)
    _emit({"points": len(pts), "status": status, "J": list(J),
           "candidates_n_le_7": [str(q) for q in candidate_rationals(J)]})
    d = _outdir(cfg)
    if d:
        write_csv(d / "mu.csv", ["kappa", "b", "tau", "theta", "f_hat"],
                  [(p.kappa, p.b, p.tau, p.theta, p.fhat) for p in pts])
        write_json(d / "mu.manifest.json", manifest("mu", cfg, {"status": status, "J": list(J)}))
    return 0


def cmd_kappa_star(cfg) -> int:
    from .fbsearch import g_kappa, g_tilde, kappa_star
    from .period import b_level

    q = _q(cfg)
    pts, _ = _mu(cfg)
    ks = kappa_star(float(q), pts)
    rep = {"q": str(q), "kappa_star": ks, "b": b_level(float(q), ks), "g": g_kappa(float(q), ks),
           "g_tilde": g_tilde(float(q), ks)}
    _emit(rep)
    d = _outdir(cfg)
    if d:
        write_json(d / "kappa_star.json", {"manifest": manifest("kappa-star", cfg), "report": rep})
    return 0


def _branch(cfg):
    from .fbsearch import branch_continue

    q = _q(cfg)
    pts, _ = _mu(cfg)
    return q, *branch_continue(float(q), int(cfg["points"]), float(cfg["step"]), mu=pts)


def cmd_branch(cfg) -> int:
    q, pts, status = _branch(cfg)
    _emit({"q": str(q), "status": status, "points": [p.to_dict() for p in pts]})
    d = _outdir(cfg)
    if d:
        write_csv(d / "branch.csv", ["eta", "a", "b", "kappa", "tau", "theta", "height"],
                  [(p.eta, p.a, p.b, p.kappa, p.tau, p.theta, p.height) for p in pts])
        write_json(d / "branch.manifest.json", manifest("branch", cfg, {"status": status}))
    return 0


def cmd_annulus(cfg) -> int:
    from .fbsearch import assemble_annulus

    q, pts, status = _branch(cfg)
    certs = [assemble_annulus(p, q).to_dict() for p in pts]
    _emit({"q": str(q), "status": status, "certificates": certs})
    d = _outdir(cfg)
    if d:
        for i, c in enumerate(certs):
            write_json(d / f"certificate_{i}.json", {"manifest": manifest("annulus", cfg), "certificate": c})
    return 0


def cmd_export(cfg) -> int:
    from .fbsearch import assemble_annulus, export_h3, write_obj

    q, pts, status = _branch(cfg)
    d = _outdir(cfg) or Path(".")
    rows = []
    for i, p in enumerate(pts):
        cert = assemble_annulus(p, q)
        mesh = export_h3(cert, (int(cfg["grid_u"]), 0))
        man = manifest("export", cfg, {"certificate": cert.to_dict(), "h3_residual": mesh["h3_residual"],
                                       "h3_residual_raw": mesh["h3_residual_raw"],
                                       "h3_residual_raw_relative": mesh["h3_residual_raw_relative"],
                                       "boundary_radius_gap": mesh["boundary_radius_gap"]})
        write_obj(d / f"annulus_{i}_poincare.obj", mesh["poincare"], mesh["faces"], f"manifest: annulus_{i}.json")
        write_obj(d / f"annulus_{i}_model.obj", mesh["h3"][:, :3], mesh["faces"])
        write_csv(d / f"annulus_{i}_h3.csv", ["x1", "x2", "x3", "x4"], [tuple(r) for r in mesh["h3"]])
        write_json(d / f"annulus_{i}.json", man)
        rows.append({"index": i, "eta": p.eta, "a": p.a, "kappa": p.kappa, "h3_residual": mesh["h3_residual"]})
    _emit({"q": str(q), "status": status, "meshes": rows})
    return 0


def sweep_point(args: tuple) -> dict:
    """One sweep row; numerical failures are recorded, never raised."""
    a, b, k = args
    from .hamilton import periods_MN, tau_info
    from .immersion import SurfaceSolver, check_O_minus, frame_residuals
    from .wente_ode import ParamTriple, derived_constants, first_integrals, integrate_alphabeta

    row: dict = {"a": a, "b": b, "kappa": k}
    try:
        p = ParamTriple(a, b, k)
    except ValueError as exc:
        row["error"] = f"outside O: {exc}"
        return row
    try:
        traj = integrate_alphabeta(p, 3.0, 1e-10)
        y = traj(np.linspace(traj.u_min, traj.u_max, 61))
        dc = derived_constants(p)
        c1, c2 = first_integrals(y, p, dc)
        row["C1_drift"] = float(np.max(np.abs(c1 - dc.C1)) / max(abs(dc.C1), 1e-300))
        if c2 is not None:
            row["C2_drift"] = float(np.max(np.abs(c2 - dc.C2)) / max(abs(dc.C2), 1e-300))
    except Exception as exc:  # noqa: BLE001 - isolate every failure
        row["error_alphabeta"] = str(exc)
    try:
        from .period import period_theta

        omin = check_O_minus(p)
        row["O_minus"] = omin
        if omin:
            row["theta"] = period_theta(p)
    except Exception as exc:  # noqa: BLE001
        row["error_theta"] = str(exc)
    try:
        ti = tau_info(p)
        row["tau"] = ti.tau
        try:
            from .fbsearch import height_map

            row["height"] = height_map(p)
        except Exception as exc:  # noqa: BLE001
            row["error_height"] = str(exc)
    except Exception as exc:  # noqa: BLE001
        row["tau_failure"] = str(exc)
    try:
        fr = frame_residuals(SurfaceSolver(p, u_max=1.0).v_line(1.0, np.linspace(0, 2.0, 9)))
        row["frame_drift"] = fr["orthonormality"]
    except Exception as exc:  # noqa: BLE001
        row["error_frame"] = str(exc)
    if k > 0.0:
        try:
            M, N = periods_MN(p)
            row["M"] = M
            row["N"] = N
        except Exception as exc:  # noqa: BLE001
            row["error_MN"] = str(exc)
    return row


def sweep(cfg) -> list:
    grid = list(
        itertools.product(
            [float(x) for x in np.linspace(*cfg["a_range"], int(cfg["n_a"]))],
            [float(x) for x in np.linspace(*cfg["b_range"], int(cfg["n_b"]))],
            [float(x) for x in np.linspace(*cfg["kappa_range"], int(cfg["n_kappa"]))],
        )
    )
    workers = pool_size()
    if workers == 1:
        return [sweep_point(g) for g in grid]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        # map preserves order, so the single writer below sees a deterministic sequence
        return list(ex.map(sweep_point, grid, chunksize=4))


def cmd_sweep(cfg) -> int:
    rows = sweep(cfg)
    keys = ["a", "b", "kappa", "O_minus", "theta", "tau", "height", "C1_drift", "C2_drift", "frame_drift", "M", "N"]
    d = _outdir(cfg)
    if d:
        with open(d / "sweep.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for r in rows:
                fh.write(dumps17(r, indent=0).replace("\n", "") + "\n")
        write_csv(d / "sweep.csv", keys + ["failure"],
                  [tuple(r.get(k) for k in keys) + (";".join(str(v) for kk, v in r.items() if "error" in kk
                                                              or "failure" in kk),) for r in rows])
        write_json(d / "sweep.manifest.json", manifest("sweep", cfg, {"rows": len(rows)}))
    _emit({"rows": len(rows), "failures": sum(1 for r in rows if any("error" in k or "failure" in k for k in r))})
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "immerse": cmd_immerse,
    "period": cmd_period,
    "tau": cmd_tau,
    "catenoid-table": cmd_catenoid_table,
    "find-b0": cmd_find_b0,
    "mu": cmd_mu,
    "kappa-star": cmd_kappa_star,
    "branch": cmd_branch,
    "annulus": cmd_annulus,
    "export": cmd_export,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fbannuli", description="Free boundary minimal annuli in space forms.")
    ap.add_argument("--version", action="version", version=f"fbannuli {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config; explicit flags override its keys")
        sp.add_argument("--a", type=float)
        sp.add_argument("--b", type=float)
        sp.add_argument("--kappa", type=float)
        sp.add_argument("--q", type=str, help="rational period such as -3/5")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--grid-u", dest="grid_u", type=int)
        sp.add_argument("--grid-v", dest="grid_v", type=int)
        sp.add_argument("--out", type=str)
        sp.add_argument("--u-max", dest="u_max", type=float)
        sp.add_argument("--kappa-min", dest="kappa_min", type=float)
        sp.add_argument("--kappa-max", dest="kappa_max", type=float)
        sp.add_argument("--steps", type=int)
        sp.add_argument("--mu-step", dest="mu_step", type=float)
        sp.add_argument("--points", type=int)
        sp.add_argument("--step", type=float)
    return ap


def _join_q(argv: list[str]) -> list[str]:
    # "--q -3/5" would be read as an option; glue the value to the flag
    out = []
    i = 0
    while i < len(argv):
        if argv[i] == "--q" and i + 1 < len(argv):
            out.append(f"--q={argv[i + 1]}")
            i += 2
            continue
        out.append(argv[i])
        i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = ap.parse_args(_join_q(argv))
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    from .fbsearch import CertificateRefused, QOutsideJ
    from .hamilton import RootNotFound, StripExhausted

    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except QOutsideJ as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CertificateRefused as exc:
        print(f"error: {exc}\n{dumps17(exc.report)}", file=sys.stderr)
        return 1
    except (RootNotFound, StripExhausted, RuntimeError, ValueError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
