"""Batch experiment driver.

Every experiment is a subcommand writing one or more CSV files (17
significant digits, header row) plus an optional minimal SVG line plot.
Exit codes: 0 success, 1 usage error, 2 tolerance breach.  The last line of
output is a machine-parsable summary of the form

    RESULT cmd=<name> status=<ok|tolerance-failure> key=value ... out=<path>
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import biot3d, blowup, fields, singular2d
from . import symgroup as sg
from .quadrature import NonIntegrableError, QuadratureFailureError, QuadratureSpec

USAGE_EXIT = 1
TOLERANCE_EXIT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the exit-code contract
    # reserves 2 for tolerance breaches, so usage errors map to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def thread_cap() -> int:
    raw = os.environ.get("OCTA_EULER_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_svg_line(path: Path, xs, series: dict[str, list], title: str) -> None:
    """Bare-bones SVG polyline chart, deterministic output."""
    w, h, pad = 640, 400, 50
    xs = [float(v) for v in xs]
    allv = [float(v) for vals in series.values() for v in vals]
    if not xs or not allv:
        return
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(allv), max(allv)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    sx = lambda v: pad + (v - x0) / (x1 - x0) * (w - 2 * pad)
    sy = lambda v: h - pad - (v - y0) / (y1 - y0) * (h - 2 * pad)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w//2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{h-pad}" x2="{w-pad}" y2="{h-pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h-pad}" stroke="black"/>',
        f'<text x="{pad}" y="{h-pad+20}" font-size="10">{x0:.4g}</text>',
        f'<text x="{w-pad}" y="{h-pad+20}" text-anchor="end" font-size="10">{x1:.4g}</text>',
        f'<text x="{pad-5}" y="{h-pad}" text-anchor="end" font-size="10">{y0:.4g}</text>',
        f'<text x="{pad-5}" y="{pad}" text-anchor="end" font-size="10">{y1:.4g}</text>',
    ]
    for k, (label, vals) in enumerate(series.items()):
        col = colors[k % len(colors)]
        pts = " ".join(f"{sx(x):.2f},{sy(float(v)):.2f}" for x, v in zip(xs, vals))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}"/>')
        parts.append(
            f'<text x="{w-pad}" y="{pad+15*k}" text-anchor="end" fill="{col}" '
            f'font-size="11">{label}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def _result_line(cmd: str, status: str, extras: dict, out: Path | None) -> None:
    kv = " ".join(f"{k}={v}" for k, v in extras.items())
    tail = f" out={out}" if out is not None else ""
    print(f"RESULT cmd={cmd} status={status}{' ' + kv if kv else ''}{tail}")


def _positive(name: str, value) -> float:
    if not value > 0:
        raise UsageError(f"{name} must be positive, got {value}")
    return value


def _load_spec(args, default: QuadratureSpec | None = None) -> QuadratureSpec:
    if getattr(args, "quad_spec", None):
        try:
            return QuadratureSpec.from_json(Path(args.quad_spec).read_text())
        except (OSError, ValueError, TypeError) as exc:
            raise UsageError(f"bad quadrature spec: {exc}") from exc
    return biot3d.DEFAULT_SPEC_3D if default is None else default


# ---------------------------------------------------------------- commands


def cmd_group_tables(args, out: Path) -> int:
    groups = {
        "octahedral": sg.octahedral_group(),
        "extended_octahedral": sg.extended_octahedral_group(),
        "rotation_2d": sg.rotation_group_2d(),
        "axis_reflection_2d": sg.axis_reflection_group_2d(),
        "extended_2d": sg.extended_group_2d(),
    }
    paths = []
    for name, group in groups.items():
        p = out / f"group_{name}.csv"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(sg.group_table_csv(group))
        paths.append(p)
    sizes = {name: len(g) for name, g in groups.items()}
    ok = sizes["octahedral"] == 24 and sizes["extended_octahedral"] == 48
    _result_line(
        "group-tables",
        "ok" if ok else "tolerance-failure",
        {"order_O": sizes["octahedral"], "order_Otilde": sizes["extended_octahedral"]},
        paths[0].parent,
    )
    return 0 if ok else TOLERANCE_EXIT


def _interior_quadrant_points(n: int, seed: int) -> np.ndarray:
    # strictly inside {0 < x2 < x1}, away from the jump lines
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.06, math.pi / 4 - 0.06, size=n)
    radius = rng.uniform(0.3, 4.0, size=n)
    return np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)


def cmd_riesz2d_verify(args, out: Path) -> int:
    n = int(args.n_points)
    tol = _positive("tol", float(args.tol))
    if n < 1:
        raise UsageError("n-points must be >= 1")
    pts = _interior_quadrant_points(n, args.seed)
    field = singular2d.odd_quadrant_indicator()
    k12 = singular2d.riesz_kernel("12")
    spec = _load_spec(args, singular2d.DEFAULT_SPEC_2D)
    rows = []
    worst = 0.0
    for x in pts:
        res = singular2d.riesz_pv_2d(field, k12, x, spec)
        expected = singular2d.riesz_quadrant_closed_form(x)
        err = abs(float(res.value) - expected)
        worst = max(worst, err)
        rows.append(
            [x[0], x[1], "12", res.value, res.err_est, expected, err, err <= tol]
        )
    path = out / "riesz2d_verify.csv"
    write_csv(
        path,
        ["x1", "x2", "kernel", "value", "err_est", "expected", "abs_err", "ok"],
        rows,
    )
    if args.plot:
        write_svg_line(
            out / "riesz2d_verify.svg",
            list(range(n)),
            {"value": [r[3] for r in rows]},
            "off-diagonal transform of the odd quadrant indicator",
        )
    ok = worst <= tol
    _result_line(
        "riesz2d-verify",
        "ok" if ok else "tolerance-failure",
        {"points": n, "max_abs_err": f"{worst:.3e}"},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def cmd_bc_slope(args, out: Path) -> int:
    radii = [float(v) for v in args.radii.split(",")]
    if len(radii) < 4 or any(not 0 < r <= 0.25 for r in radii):
        raise UsageError("radii must be >= 4 values in (0, 1/4]")
    tol = _positive("tol", float(args.tol))
    spec = _load_spec(args, singular2d.DEFAULT_SPEC_2D)
    fits = {}
    value_rows = []
    for name in ("12", "11", "22"):
        fit = singular2d.bc_log_slope(singular2d.riesz_kernel(name), radii, spec)
        fits[name] = fit
        for r, v in zip(fit.radii, fit.values):
            value_rows.append([r, name, v])
    write_csv(out / "bc_values.csv", ["r", "kernel", "value"], value_rows)
    path = out / "bc_slope.csv"
    write_csv(
        path,
        ["kernel", "c", "b", "residual"],
        [[k, f.c, f.b, f.residual] for k, f in fits.items()],
    )
    if args.plot:
        write_svg_line(
            out / "bc_slope.svg",
            [math.log(r) for r in radii],
            {k: list(f.values) for k, f in fits.items()},
            "transform of the cut-off sign data vs ln r",
        )
    # the diagonal kernels must carry no logarithm; the off-diagonal slope is
    # reported as measured (see README for the constant's provenance)
    ok = abs(fits["11"].c) <= tol and abs(fits["22"].c) <= tol
    _result_line(
        "bc-slope",
        "ok" if ok else "tolerance-failure",
        {"c12": f"{fits['12'].c:.5f}", "c11": f"{fits['11'].c:.2e}",
         "c22": f"{fits['22'].c:.2e}"},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def cmd_sector_modes(args, out: Path) -> int:
    tol = _positive("tol", float(args.tol))
    cases = [(2, 0.5), (4, 0.0), (4, 0.5), (6, 0.25)]
    rows = []
    worst = 0.0
    for m, alpha in cases:
        mode = singular2d.sector_poisson_mode(m, alpha)
        resid = singular2d.polar_laplacian_residual(mode, [0.3, 0.5, 0.7], h=args.h)
        worst = max(worst, resid)
        rows.append([m, alpha, mode.coefficient, mode.logarithmic, resid,
                     resid <= tol])
    log_mode = singular2d.sector_poisson_mode(2, 0.0)
    rows.append([2, 0.0, log_mode.coefficient, log_mode.logarithmic, 0.0, True])
    path = out / "sector_modes.csv"
    write_csv(
        path, ["m", "alpha", "coefficient", "logarithmic", "max_rel_err", "ok"], rows
    )
    ok = worst <= tol and log_mode.logarithmic
    _result_line(
        "sector-modes",
        "ok" if ok else "tolerance-failure",
        {"cases": len(rows), "max_rel_err": f"{worst:.3e}"},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def cmd_expansion_check(args, out: Path) -> int:
    kmin, kmax = int(args.k_min), int(args.k_max)
    if not 0 <= kmin < kmax:
        raise UsageError("need 0 <= k-min < k-max")
    spec = _load_spec(args)
    bump = fields.smooth_bump_field()
    ray = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
    rows = []
    ts, rem = [], []
    for k in range(kmin, kmax + 1):
        t = 2.0 ** -k
        res = biot3d.velocity_expansion(bump, t * ray, spec)
        rows.append([t, res.remainder, res.c_fit, *res.u_pv, *res.u_expansion])
        ts.append(t)
        rem.append(max(res.remainder, 1e-300))
    slope = float(np.polyfit(np.log(ts), np.log(rem), 1)[0])
    path = out / "expansion_check.csv"
    write_csv(
        path,
        ["t", "remainder", "c_fit", "u1_pv", "u2_pv", "u3_pv",
         "u1_exp", "u2_exp", "u3_exp"],
        rows,
    )
    if args.plot:
        write_svg_line(
            out / "expansion_check.svg",
            [math.log(t) for t in ts],
            {"log remainder": [math.log(r) for r in rem]},
            "expansion remainder vs |x| (log-log)",
        )
    ok = slope >= args.min_slope
    _result_line(
        "expansion-check",
        "ok" if ok else "tolerance-failure",
        {"slope": f"{slope:.3f}", "min_slope": args.min_slope},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def _cone_points(n: int, seed: int) -> np.ndarray:
    """Random interior points of the open cone {x1 > x2 > x3 > 0}."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        cand = rng.uniform(0.1, 3.0, size=3)
        c = np.sort(cand)[::-1]
        if c[0] > c[1] * 1.05 and c[1] > c[2] * 1.05 and c[2] > 0.05:
            pts.append(c)
    return np.array(pts)


def _parse_pairs(raw: str) -> list[tuple[float, float]]:
    pairs = []
    for chunk in raw.split(";"):
        a, b = chunk.split(",")
        pairs.append((float(a), float(b)))
    return pairs


def cmd_velocity_verify(args, out: Path) -> int:
    return _verify_3d(args, out, gradient=False)


def cmd_gradient_verify(args, out: Path) -> int:
    return _verify_3d(args, out, gradient=True)


def _verify_3d(args, out: Path, gradient: bool) -> int:
    tol = _positive("tol", float(args.tol))
    pairs = _parse_pairs(args.pairs)
    pts = _cone_points(int(args.n_points), args.seed)
    spec = _load_spec(args)
    rows = []
    worst = 0.0
    for lam, mu in pairs:
        fld = blowup.extended_constant_vorticity(lam, mu)
        for x in pts:
            if gradient:
                res = biot3d.velocity_gradient_pv(fld, x, spec)
                exact = blowup.si_velocity_gradient(lam, mu)
            else:
                res = biot3d.velocity_pv(fld, x, spec)
                exact = blowup.si_velocity(lam, mu, x)
            scale = max(float(np.abs(exact).max()), 1e-12)
            rel = float(np.abs(res.value - exact).max()) / scale
            worst = max(worst, rel)
            rows.append(
                [*x, lam, mu, *np.ravel(res.value), res.err_est, rel, rel <= tol]
            )
    name = "gradient_verify" if gradient else "velocity_verify"
    ncomp = 9 if gradient else 3
    comp_names = (
        [f"g{i}{j}" for i in range(1, 4) for j in range(1, 4)]
        if gradient
        else ["u1", "u2", "u3"]
    )
    path = out / f"{name}.csv"
    write_csv(
        path,
        ["x1", "x2", "x3", "lambda", "mu", *comp_names, "err_est", "rel_err", "ok"],
        rows,
    )
    ok = worst <= tol
    _result_line(
        name.replace("_", "-"),
        "ok" if ok else "tolerance-failure",
        {"cases": len(rows), "max_rel_err": f"{worst:.3e}"},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def cmd_sphere_moments(args, out: Path) -> int:
    tol = _positive("tol", float(args.tol))
    fld = blowup.extended_constant_vorticity(args.lam, args.mu)
    cases = [
        ("y3", 1), ("y1*y2", 1), ("y2*y3", 1), ("y1*y3", 1),
        ("y1^2", 1), ("y2^2", 1), ("y3^2", 1),
        ("y2", 2), ("y1^2", 2), ("y2^2", 2), ("y3^2", 2),
        ("y1*y2", 2), ("y1*y3", 2), ("y2*y3", 2),
    ]
    rows = []
    worst = 0.0
    for p, comp in cases:
        resid = biot3d.sphere_moment_residual(fld, args.radius, p, comp)
        worst = max(worst, resid)
        rows.append([p, comp + 1, args.radius, resid, resid <= tol])
    path = out / "sphere_moments.csv"
    write_csv(path, ["p", "component", "R", "residual", "ok"], rows)
    ok = worst <= tol
    _result_line(
        "sphere-moments",
        "ok" if ok else "tolerance-failure",
        {"cases": len(rows), "max_residual": f"{worst:.3e}"},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def _grid_values(raw: str) -> list[float]:
    return [float(v) for v in raw.split(",")]


def cmd_blowup_classify(args, out: Path) -> int:
    if args.lam is not None or args.mu is not None:
        if args.lam is None or args.mu is None:
            raise UsageError("--lambda and --mu must be given together")
        grid = [(float(args.lam), float(args.mu))]
    else:
        vals = _grid_values(args.grid)
        grid = [(a, b) for a in vals for b in vals]

    def classify_cell(cell):
        lam0, mu0 = cell
        verdict = blowup.classify_initial_data(lam0, mu0)
        agreed = None
        if args.verify_integration:
            traj = blowup.integrate(
                lam0, mu0, rtol=1e-8, atol=1e-10,
                escape_threshold=args.escape, t_max=args.t_max,
            )
            agreed = traj.escaped == verdict.blows_up
        return (lam0, mu0, verdict, agreed)

    workers = thread_cap()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(classify_cell, grid))
    else:
        results = [classify_cell(c) for c in grid]
    rows = []
    mismatches = 0
    for lam0, mu0, verdict, agreed in results:
        row = [lam0, mu0, verdict.blows_up, verdict.rule, verdict.t_star_estimate]
        if args.verify_integration:
            row.append(agreed)
            mismatches += 0 if agreed else 1
        rows.append(row)
    header = ["lambda0", "mu0", "blows_up", "rule", "T_star"]
    if args.verify_integration:
        header.append("integration_agrees")
    path = out / "blowup_classify.csv"
    write_csv(path, header, rows)
    ok = mismatches == 0
    _result_line(
        "blowup-classify",
        "ok" if ok else "tolerance-failure",
        {"cells": len(rows), "mismatches": mismatches},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def cmd_blowup_integrate(args, out: Path) -> int:
    for name in ("rtol", "atol", "escape", "t_max"):
        _positive(name, getattr(args, name))
    traj = blowup.integrate(
        args.lam, args.mu, rtol=args.rtol, atol=args.atol,
        escape_threshold=args.escape, t_max=args.t_max,
    )
    ts = np.linspace(traj.t[0], traj.t[-1], 400)
    ys = traj.dense(ts)
    rows = [[t, y0, y1] for t, y0, y1 in zip(ts, ys[0], ys[1])]
    path = out / "trajectory.csv"
    write_csv(path, ["t", "lambda", "mu"], rows)
    if args.plot:
        write_svg_line(
            out / "trajectory.svg", list(ts),
            {"lambda": list(ys[0]), "mu": list(ys[1])},
            "amplitude trajectory",
        )
    resid = blowup.difference_identity_residual(traj)
    extras = {
        "escaped": str(traj.escaped).lower(),
        "diff_identity_resid": f"{resid:.2e}",
    }
    if traj.t_star_estimate is not None:
        extras["T_star"] = f"{traj.t_star_estimate:.8g}"
    _result_line("blowup-integrate", "ok", extras, path)
    return 0


def cmd_slip_check(args, out: Path) -> int:
    tol = _positive("tol", float(args.tol))
    rng = np.random.default_rng(args.seed)
    pairs = _parse_pairs(args.pairs)
    rows = []
    worst = 0.0
    for lam, mu in pairs:
        for face in blowup.FACE_LABELS:
            ab = rng.uniform(0.1, 3.0, size=(int(args.n_points), 2))
            if face == "x3=0":
                pts = np.stack([ab[:, 0] + ab[:, 1], ab[:, 1], 0 * ab[:, 0]], axis=1)
            elif face == "x1=x2":
                pts = np.stack([ab[:, 0] + ab[:, 1], ab[:, 0] + ab[:, 1],
                                ab[:, 1] * 0.5], axis=1)
            else:
                pts = np.stack([ab[:, 0] + 2 * ab[:, 1], ab[:, 1], ab[:, 1]], axis=1)
            resid = blowup.slip_residual(lam, mu, face, pts)
            worst = max(worst, resid)
            rows.append([face, lam, mu, resid, resid <= tol])
    path = out / "slip_check.csv"
    write_csv(path, ["face", "lambda", "mu", "max_residual", "ok"], rows)
    ok = worst <= tol
    _result_line(
        "slip-check",
        "ok" if ok else "tolerance-failure",
        {"cases": len(rows), "max_residual": f"{worst:.2e}"},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def cmd_flow_map(args, out: Path) -> int:
    tol = _positive("tol", float(args.tol))
    rng = np.random.default_rng(args.seed)
    if args.frozen:
        source = (args.lam, args.mu)
        t_end = args.t
    else:
        traj = blowup.integrate(args.lam, args.mu)
        if traj.escaped and traj.t_star_estimate is not None:
            t_end = args.t_frac * traj.t_star_estimate
        else:
            t_end = min(args.t, float(traj.t[-1]))
        source = traj
    starts = np.sort(rng.uniform(0.05, 2.0, size=(int(args.n_paths), 3)))[:, ::-1]
    pos, mins = blowup.flow_map_batch(source, starts, t_end,
                                      n_steps=int(args.n_steps))
    worst = float(mins.min())
    rows = [[*c, *p, *m] for c, p, m in zip(starts, pos, mins)]
    path = out / "flow_map.csv"
    write_csv(
        path,
        ["x1_0", "x2_0", "x3_0", "x1_t", "x2_t", "x3_t",
         "min_x3", "min_x1_minus_x2", "min_x2_minus_x3"],
        rows,
    )
    ok = worst >= -tol
    _result_line(
        "flow-map",
        "ok" if ok else "tolerance-failure",
        {"paths": len(rows), "t_end": f"{t_end:.6g}", "min_face": f"{worst:.2e}"},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


def cmd_holder_probe(args, out: Path) -> int:
    alpha = float(args.alpha)
    if not 0.0 < alpha < 1.0:
        raise UsageError("alpha must lie in (0, 1)")
    vertex = sg.HALF_LINE_DIRECTIONS.get(args.vertex)
    if vertex is None:
        raise UsageError(f"vertex must be one of {sorted(sg.HALF_LINE_DIRECTIONS)}")
    pts = fields.halfline_probe_points(vertex, seed=args.seed)
    if args.field == "constant-vorticity":
        fld = blowup.extended_constant_vorticity(args.lam, args.mu)
    elif args.field == "bump":
        fld = fields.smooth_bump_field()
    else:
        raise UsageError("field must be constant-vorticity or bump")
    cloud = fields.SampleCloud.from_field(fld, pts)
    plain = fields.holder_seminorm(cloud, alpha)
    ring = fields.ring_holder_seminorm(cloud, alpha)
    path = out / "holder_probe.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(cloud.to_csv())
    write_csv(
        out / "holder_probe_summary.csv",
        ["vertex", "field", "alpha", "holder_seminorm", "ring_holder_seminorm"],
        [[args.vertex, args.field, alpha, plain, ring]],
    )
    ok = math.isfinite(ring)
    _result_line(
        "holder-probe",
        "ok" if ok else "tolerance-failure",
        {"points": len(cloud), "holder": f"{plain:.4g}", "ring": f"{ring:.4g}"},
        path,
    )
    return 0 if ok else TOLERANCE_EXIT


# ------------------------------------------------------------- dispatcher

_COMMANDS = {
    "group-tables": cmd_group_tables,
    "riesz2d-verify": cmd_riesz2d_verify,
    "bc-slope": cmd_bc_slope,
    "sector-modes": cmd_sector_modes,
    "expansion-check": cmd_expansion_check,
    "velocity-verify": cmd_velocity_verify,
    "gradient-verify": cmd_gradient_verify,
    "sphere-moments": cmd_sphere_moments,
    "blowup-classify": cmd_blowup_classify,
    "blowup-integrate": cmd_blowup_integrate,
    "slip-check": cmd_slip_check,
    "flow-map": cmd_flow_map,
    "holder-probe": cmd_holder_probe,
}


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="JSON file with parameter overrides")
    common.add_argument("--out", type=str, default="out", help="output directory")
    common.add_argument("--plot", action="store_true", help="emit SVG line plots")
    common.add_argument("--seed", type=int, default=0, help="sample-point seed")
    common.add_argument("--quad-spec", type=str, default=None,
                        help="JSON quadrature spec file")

    parser = _Parser(prog="octa-euler", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    registry: dict[str, argparse.ArgumentParser] = {}

    registry["group-tables"] = sub.add_parser("group-tables", parents=[common])

    p = registry["riesz2d-verify"] = sub.add_parser("riesz2d-verify", parents=[common])
    p.add_argument("--n-points", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-3)

    p = registry["bc-slope"] = sub.add_parser("bc-slope", parents=[common])
    p.add_argument("--radii", type=str,
                   default=",".join(str(2.0 ** -k) for k in range(3, 9)))
    p.add_argument("--tol", type=float, default=0.02)

    p = registry["sector-modes"] = sub.add_parser("sector-modes", parents=[common])
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--h", type=float, default=1e-3)

    p = registry["expansion-check"] = sub.add_parser("expansion-check", parents=[common])
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=6)
    p.add_argument("--min-slope", type=float, default=0.9)

    for name in ("velocity-verify", "gradient-verify"):
        p = registry[name] = sub.add_parser(name, parents=[common])
        p.add_argument("--pairs", type=str, default="1,0;0,1;1,1;-1,2")
        p.add_argument("--n-points", type=int, default=5)
        p.add_argument("--tol", type=float, default=1e-2)

    p = registry["sphere-moments"] = sub.add_parser("sphere-moments", parents=[common])
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-8)

    p = registry["blowup-classify"] = sub.add_parser("blowup-classify", parents=[common])
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--grid", type=str, default="-2,-1,-0.5,0,0.5,1,2")
    p.add_argument("--verify-integration", action="store_true")
    p.add_argument("--escape", type=float, default=1e8)
    p.add_argument("--t-max", type=float, default=50.0)

    p = registry["blowup-integrate"] = sub.add_parser("blowup-integrate", parents=[common])
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--escape", type=float, default=1e8)
    p.add_argument("--t-max", type=float, default=50.0)

    p = registry["slip-check"] = sub.add_parser("slip-check", parents=[common])
    p.add_argument("--pairs", type=str, default="1,0;2,5;1,1")
    p.add_argument("--n-points", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-14)

    p = registry["flow-map"] = sub.add_parser("flow-map", parents=[common])
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--frozen", action="store_true")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--t-frac", type=float, default=0.9)
    p.add_argument("--n-paths", type=int, default=50)
    p.add_argument("--n-steps", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-9)

    p = registry["holder-probe"] = sub.add_parser("holder-probe", parents=[common])
    p.add_argument("--vertex", type=str, default="a2")
    p.add_argument("--field", type=str, default="constant-vorticity")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=1.0)

    return parser, registry


def _explicit_flags(argv) -> set[str]:
    """Destination names of options that literally appear on the command line."""
    seen = set()
    for token in argv or []:
        if token.startswith("--"):
            name = token[2:].split("=", 1)[0].replace("-", "_")
            seen.add("lam" if name == "lambda" else name)
    return seen


def _apply_config(args, explicit: set[str]) -> None:
    if not getattr(args, "config", None):
        return
    try:
        raw = Path(args.config).read_text()
        data = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"could not read config {args.config!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object of parameter overrides")
    for key, value in data.items():
        attr = key.replace("-", "_")
        if attr == "lambda":
            attr = "lam"
        if not hasattr(args, attr):
            raise UsageError(f"config key {key!r} unknown for this subcommand")
        # explicit command-line flags win over the config file
        if attr not in explicit:
            setattr(args, attr, value)


def main(argv=None) -> int:
    parser, registry = build_parser()
    command = None
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(argv)
        command = args.command
        if not command:
            raise UsageError("a subcommand is required")
        _apply_config(args, _explicit_flags(argv))
        out = Path(args.out)
        return _COMMANDS[command](args, out)
    except (QuadratureFailureError, NonIntegrableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"RESULT cmd={command} status=tolerance-failure")
        return TOLERANCE_EXIT
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"RESULT cmd={command or 'none'} status=usage-error",
              file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
