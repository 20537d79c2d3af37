"""Command-line front end.

Exit codes
----------
0   success (and, for ``solve``, both residual gates passed)
1   a residual gate failed (``solve``, ``selftest``)
2   x = 2 pi/n exceeds X; the message reports the threshold N
3   the area equation could not be bracketed (includes n = 1)
4   mesh invariant failure, or the solid is unbounded
5   the path or geometry is outside the supported domain
64  command-line usage error
65  unreadable or malformed input file

Options can also be given as environment variables ``TRAJ_<NAME>``
(e.g. ``TRAJ_N=3``); explicit flags take precedence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from . import corpus
from .errors import (
    BracketFailure,
    DegenerateHull,
    JunctionGap,
    NotConstructible,
    RoughCurvatureWarning,
    TangentKink,
    TrajectoidError,
    XOutOfRange,
)
from .path_model import PlanarPath, load_path, resample
from .solver import SCHEMA_VERSION, compute_bounds, min_period, scan_dtk, solve
from .sphere_trace import trace, write_trace_csv
from .spherical_geometry import unit_area_D
from .trajectoid_mesh import (
    SAMPLES_PER_COPY,
    assemble_closed_curve,
    build_mesh,
    export_mesh,
    verify_period,
)

EXIT_OK = 0
EXIT_GATE = 1
EXIT_X_RANGE = 2
EXIT_BRACKET = 3
EXIT_MESH = 4
EXIT_DOMAIN = 5
EXIT_USAGE = 64
EXIT_DATA = 65

ENV_PREFIX = "TRAJ_"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is taken by XOutOfRange
    def error(self, message):
        raise UsageError(message)


def _env(name, cast=str):
    val = os.environ.get(ENV_PREFIX + name.upper())
    if val is None:
        return None
    try:
        return cast(val)
    except ValueError as exc:
        raise UsageError(f"{ENV_PREFIX}{name.upper()}={val!r}: {exc}") from exc


def _flag(v) -> bool:
    return str(v).lower() in ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--path", type=Path, default=_env("path", Path),
                        help="path spec JSON file")
    common.add_argument("--out", type=Path, default=_env("out", Path),
                        help="output file (default: stdout where sensible)")
    common.add_argument("--samples", type=int, default=_env("samples", int),
                        help="trace/solve/verify: resample the path to this many samples; "
                             "mesh: curve samples per copy; scan: number of K values")
    common.add_argument("--steps", type=int, default=_env("steps", int),
                        help="integration steps per period (default from the path)")

    parser = _Parser(prog="trajectoid", description=__doc__.split("\n\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter,
                     epilog=__doc__.split("\n\n", 1)[1])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("trace", parents=[common], help="trace one period on the sphere")
    p.add_argument("--K", type=float, default=_env("K", float), required=_env("K") is None)
    p.add_argument("--svg", type=Path, default=_env("svg", Path),
                   help="SVG plot (default: --out with .svg suffix)")

    p = sub.add_parser("solve", parents=[common], help="find Q_x for period n")
    p.add_argument("--n", type=int, default=_env("n", int), required=_env("n") is None)
    p.add_argument("--scan-resolution", type=int, default=_env("scan_resolution", int) or 512)

    p = sub.add_parser("mesh", parents=[common], help="build and export the trajectoid")
    p.add_argument("--n", type=int, default=_env("n", int), required=_env("n") is None)
    p.add_argument("--K", type=float, default=_env("K", float),
                   help="use this inverse radius instead of solving (needs --force)")
    p.add_argument("--force", action="store_true", default=_flag(_env("force") or ""))
    p.add_argument("--format", choices=("stl", "obj"), default=_env("format") or None)
    p.add_argument("--report", type=Path, default=_env("report", Path),
                   help="write the invariant summary JSON here as well as to stdout")

    p = sub.add_parser("verify", parents=[common], help="closure residuals at given K, n")
    p.add_argument("--n", type=int, default=_env("n", int), required=_env("n") is None)
    p.add_argument("--K", type=float, default=_env("K", float), required=_env("K") is None)

    p = sub.add_parser("scan", parents=[common], help="tabulate K d_T(K)")
    p.add_argument("--K-min", type=float, default=_env("K_min", float))
    p.add_argument("--K-max", type=float, default=_env("K_max", float))

    p = sub.add_parser("selftest", parents=[common],
                       help="solve and verify a random smooth path")
    p.add_argument("--seed", type=int, default=_env("seed", int) or 0)
    p.add_argument("--n", type=int, default=_env("n", int),
                   help="period count (default: the threshold N)")
    return parser


def _load(args) -> PlanarPath:
    if args.path is None:
        raise UsageError("--path is required")
    path = load_path(args.path)
    if args.command in ("trace", "solve", "verify") and args.samples:
        path = resample(path, args.samples)
    return path


def _dump(obj, out: Path | None):
    text = json.dumps(_plain(obj), indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _emit(summary, report: Path | None):
    _dump(summary, None)
    if report is not None:
        _dump(summary, report)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _polyline(points, stroke):
    coords = " ".join(f"{x:.6f},{y:.6f}" for x, y in points)
    return f'<polyline fill="none" stroke={quoteattr(stroke)} stroke-width="0.01" points="{coords}"/>'


def render_svg(path: PlanarPath, tr) -> str:
    """Plan view of the path and azimuthal equidistant view of the trace."""
    plan = path.points - path.points.mean(axis=0)
    p = tr.p
    colat = np.arccos(np.clip(p[:, 2], -1.0, 1.0))
    az = np.arctan2(p[:, 1], p[:, 0])
    proj = np.column_stack([colat * np.cos(az), colat * np.sin(az)])
    boxes = []
    for pts in (plan, proj):
        span = float(np.max(np.ptp(pts, axis=0))) or 1.0
        boxes.append(pts / span)
    left = boxes[0] + [-0.6, 0.0]
    right = boxes[1] - boxes[1].mean(axis=0) + [0.6, 0.0]
    # svg y points down
    left[:, 1] *= -1.0
    right[:, 1] *= -1.0
    return "\n".join([
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="-1.2 -0.7 2.4 1.4" '
        'width="960" height="560">',
        f'<g id="plan"><title>{escape(path.name or "path")} (plan view)</title>',
        _polyline(left, "black"),
        "</g>",
        f'<g id="projection"><title>trace at K={tr.K:.6g} (azimuthal projection)</title>',
        _polyline(right, "steelblue"),
        "</g>",
        "</svg>",
        "",
    ])


def cmd_trace(args) -> int:
    path = _load(args)
    if not args.K or args.K <= 0.0:
        raise UsageError("--K must be positive")
    tr = trace(path, args.K, args.steps)
    if args.out is None:
        write_trace_csv(tr, sys.stdout)
        if args.svg is not None:
            args.svg.write_text(render_svg(path, tr))
        return EXIT_OK
    with open(args.out, "w", newline="") as fh:
        write_trace_csv(tr, fh)
    svg = args.svg if args.svg is not None else args.out.with_suffix(".svg")
    svg.write_text(render_svg(path, tr))
    return EXIT_OK


def _solve_report(path, args):
    res = solve(path, args.n, steps=args.steps, scan_resolution=args.scan_resolution)
    rep = res.report()
    rep["config"]["path_file"] = str(args.path)
    rep["passed"] = res.passed
    return res, rep


def cmd_solve(args) -> int:
    path = _load(args)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    _, rep = _solve_report(path, args)
    _dump(rep, args.out)
    return EXIT_OK if rep["passed"] else EXIT_GATE


def cmd_mesh(args) -> int:
    path = _load(args)
    if args.n < 2:
        raise UsageError("--n must be at least 2 for a mesh")
    per_copy = args.samples or SAMPLES_PER_COPY
    fmt = args.format or (args.out.suffix.lstrip(".").lower() if args.out else "stl")
    if fmt not in ("stl", "obj"):
        raise UsageError(f"unknown mesh format {fmt!r}")
    summary = {"schema_version": SCHEMA_VERSION, "n": args.n}
    geodesic = not np.any(path.kappa)
    if args.K is not None:
        if not args.force:
            raise UsageError("--K replaces the solver and needs --force")
        K = args.K
        tr = trace(path, K, args.steps)
        apex = "C1" if geodesic or unit_area_D(tr) >= 0.0 else "C2"
    elif geodesic:
        # a straight path closes along a great circle at every K
        K = 0.5 * math.pi / path.period_length
        tr = trace(path, K, args.steps)
        apex = "C1"
    else:
        res = solve(path, args.n, steps=args.steps)
        summary.update(solve=_plain(res.report()))
        K, tr, apex = res.Q_x, res.trace, res.apex_choice
    summary.update(K=K, apex_choice=apex)
    failures = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", TangentKink)
            curve = assemble_closed_curve(tr, args.n, apex)
        if any(issubclass(w.category, TangentKink) for w in caught):
            failures.append("tangent_kink")
        crep = curve.report()
        summary["curve"] = crep
        for key, tol in (("symmetry_residual", 1e-8), ("area_residual", 1e-6),
                         ("halving_residual", 1e-6)):
            if crep[key] >= tol:
                failures.append(key)
        mesh = build_mesh(curve, per_copy, provenance={"path": path.name, "Q_x": K})
    except (DegenerateHull, JunctionGap, NotConstructible) as exc:
        name = {DegenerateHull: "bounded", JunctionGap: "junction_gap",
                NotConstructible: "constructible"}[type(exc)]
        summary["failures"] = failures + [name]
        summary["error"] = str(exc)
        _emit(summary, args.report)
        label = "" if isinstance(exc, DegenerateHull) else f"{name}: "
        print(f"error: {label}{exc}", file=sys.stderr)
        return EXIT_MESH
    mrep = mesh.check().as_dict()
    failures += mrep.pop("failures")
    summary["mesh"] = mrep
    summary["vertices"] = len(mesh.vertices)
    summary["triangles"] = len(mesh.triangles)
    summary["failures"] = failures
    if args.out is not None:
        export_mesh(mesh, args.out, fmt)
        summary["file"] = str(args.out)
    _emit(summary, args.report)
    if failures:
        print("error: mesh invariants failed: " + ", ".join(failures), file=sys.stderr)
        return EXIT_MESH
    return EXIT_OK


def cmd_verify(args) -> int:
    path = _load(args)
    if args.K <= 0.0 or args.n < 1:
        raise UsageError("--K must be positive and --n at least 1")
    rep = {"schema_version": SCHEMA_VERSION}
    rep.update(verify_period(path, args.K, args.n, steps=args.steps))
    _dump(rep, args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    path = _load(args)
    K1 = math.pi / path.period_length
    lo = args.K_min if args.K_min is not None else 1e-3 * K1
    hi = args.K_max if args.K_max is not None else K1
    if not 0.0 < lo < hi:
        raise UsageError("need 0 < K-min < K-max")
    grid = np.geomspace(lo, hi, args.samples or 256)
    table = scan_dtk(path, grid, args.steps)
    out = sys.stdout if args.out is None else open(args.out, "w", newline="")
    try:
        out.write("K,g\n")
        for K, g in table:
            out.write(f"{K:.17g},{g:.17g}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_selftest(args) -> int:
    path = corpus.random_fourier_path(seed=args.seed)
    bounds = compute_bounds(path)
    n = args.n or min_period(bounds)
    res = solve(path, n, bounds, steps=args.steps)
    rep = res.report()
    rep["seed"] = args.seed
    rep["passed"] = res.passed
    _dump(rep, args.out)
    return EXIT_OK if res.passed else EXIT_GATE


COMMANDS = {
    "trace": cmd_trace, "solve": cmd_solve, "mesh": cmd_mesh,
    "verify": cmd_verify, "scan": cmd_scan, "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    warnings.simplefilter("default", RoughCurvatureWarning)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except XOutOfRange as exc:
        print(f"error: x exceeds X; guaranteed for n \u2265 {exc.N} ({exc})", file=sys.stderr)
        return EXIT_X_RANGE
    except BracketFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.note:
            print(f"note: {exc.note}", file=sys.stderr)
        return EXIT_BRACKET
    except TrajectoidError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
