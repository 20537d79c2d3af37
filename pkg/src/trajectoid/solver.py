"""Finding sphere radii at which a path admits a period-n trajectoid.

With x = 2*pi/n the search runs in three stages:

1. ``compute_bounds``: K1 = pi/L; K2 is where ``g(K) = K d_T(K)`` stops
   increasing; K0 = min(K1, K2) and X = g(K0).
2. ``find_Kx``: the root of ``g(K) = x`` on (0, K0].  At K_x the isosceles
   triangle over AB with apex angle x has legs of a quarter circle and unit
   area exactly x.
3. ``find_Qx``: the apex side is fixed so that the triangle and D_K have the
   same sign at K_x, then ``f(K) = |S^R_x(K)| K**2 - x`` is scanned downward
   from K_x (where f >= 0) until it turns negative, and the bracket is
   bisected.

Only bracketing bisection is used; f is continuous but nothing more is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BracketFailure, NonSmoothPath, XOutOfRange
from .path_model import PlanarPath
from .sphere_trace import (
    FRAME0,
    SphericalTrace,
    central_angle,
    closure_residual,
    end_frames,
    net_rotation,
    trace,
    trace_frames,
)
from .spherical_geometry import RegionAreas, delta_area_formula, region_area_R, unit_area_D

SCHEMA_VERSION = 1

SCAN_RESOLUTION = 512
SCAN_FLOOR = 1e-4
BREAK_RTOL = 1e-10
KX_RTOL = 1e-12
QX_GRID = 512
QX_FLOOR = 1e-4
QX_RTOL = 1e-13
AREA_GATE = 1e-8
ROTATION_GATE = 1e-6

PERIOD_ONE_NOTE = (
    "period 1 needs the traced curve to close on itself after a single period; "
    "most paths do not have this property, and the apex construction used here "
    "only covers apex angles below pi (n >= 3)"
)


@dataclass(frozen=True)
class SolverBounds:
    K1: float
    K2: float
    K0: float
    X: float
    grid: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    steps: int | None = None

    def as_dict(self):
        return {"K1": self.K1, "K2": self.K2, "K0": self.K0, "X": self.X}


@dataclass(frozen=True, eq=False)
class SolveResult:
    n: int
    x: float
    K_x: float
    Q_x: float
    N: int
    apex_choice: str
    area_residual: float
    rotation_residual: float
    bounds: SolverBounds = field(repr=False)
    areas: RegionAreas = field(repr=False)
    trace: SphericalTrace = field(repr=False)
    config: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.area_residual < AREA_GATE and self.rotation_residual < ROTATION_GATE

    def report(self) -> dict:
        b = self.bounds
        return {
            "schema_version": SCHEMA_VERSION,
            "n": self.n, "x": self.x,
            "K1": b.K1, "K2": b.K2, "K0": b.K0, "X": b.X, "N": self.N,
            "K_x": self.K_x, "Q_x": self.Q_x, "apex_choice": self.apex_choice,
            "area_residual": self.area_residual,
            "rotation_residual": self.rotation_residual,
            "S_D": self.areas.S_D, "S_Delta": self.areas.S_Delta, "S_R": self.areas.S_R,
            "config": dict(self.config),
        }


def g_values(path: PlanarPath, Ks, steps=None) -> np.ndarray:
    """``K d_T(K)``, the angle between the trace endpoints, for each K."""
    F = end_frames(path, Ks, steps)
    return central_angle(FRAME0[0], F[:, 0, :])


def scan_dtk(path: PlanarPath, K_grid, steps=None) -> np.ndarray:
    """Table of ``(K, K d_T(K))`` rows over ``K_grid``."""
    K_grid = np.asarray(K_grid, dtype=float)
    return np.column_stack([K_grid, g_values(path, K_grid, steps)])


def _refine_break(path, lo, hi, steps, rtol):
    """Bisect on the sign of dg/dK between lo (increasing) and hi (decreasing)."""
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        dlt = 1e-7 * mid
        gm, gp = g_values(path, [mid - dlt, mid + dlt], steps)
        if gp > gm:
            lo = mid
        else:
            hi = mid
    return lo


def compute_bounds(path: PlanarPath, scan_resolution: int = SCAN_RESOLUTION,
                   floor: float = SCAN_FLOOR, steps=None,
                   rtol: float = BREAK_RTOL) -> SolverBounds:
    """Bounds K1, K2, K0 and X for ``path``.

    ``g(K) = K d_T(K)`` is tabulated on a geometric grid of
    ``scan_resolution`` points in ``[floor * K1, K1]``; K2 is the first
    local maximum, refined by bisection, or K1 if g keeps increasing.
    """
    K1 = math.pi / path.period_length
    for attempt in range(2):
        grid = np.geomspace(floor * K1, K1, scan_resolution)
        g = g_values(path, grid, steps)
        drops = np.nonzero(np.diff(g) <= 0.0)[0]
        if len(drops) == 0 or drops[0] > 0:
            break
        # decrease already at the bottom of the grid: look closer to K = 0
        floor *= 1e-2
        scan_resolution *= 4
    else:
        raise NonSmoothPath("K d_T(K) is not increasing near K = 0")
    if len(drops) == 0:
        K2 = K1
    else:
        i = drops[0]
        K2 = _refine_break(path, grid[i - 1], grid[i + 1], steps, rtol)
        keep = grid <= K2
        grid, g = grid[keep], g[keep]
    K0 = min(K1, K2)
    X = float(g_values(path, [K0], steps)[0])
    return SolverBounds(K1=K1, K2=K2, K0=K0, X=X, grid=grid, g=g, steps=steps)


def min_period(bounds: SolverBounds) -> int:
    """Smallest n with 2*pi/n <= X."""
    return max(1, math.ceil(2.0 * math.pi / bounds.X * (1.0 - 1e-12)))


def find_Kx(path: PlanarPath, x: float, bounds: SolverBounds,
            rtol: float = KX_RTOL) -> float:
    """Root of ``K d_T(K) = x`` on (0, K0], by bisection.

    The returned K satisfies ``g(K) <= x`` so the triangle over AB with
    apex angle x is constructible there.
    """
    if x > bounds.X * (1.0 + 1e-12):
        N = min_period(bounds)
        raise XOutOfRange(f"x = {x:.6g} exceeds X = {bounds.X:.6g}", N=N)
    if x >= bounds.X:
        return bounds.K0
    lo, hi = 0.0, bounds.K0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if g_values(path, [mid], bounds.steps)[0] < x:
            lo = mid
        else:
            hi = mid
    return lo


def _f_values(path, Ks, x, apex_choice, steps):
    sign = 1.0 if apex_choice == "C1" else -1.0
    s, kappa, frames = trace_frames(path, Ks, steps)
    out = np.empty(len(Ks))
    for j, K in enumerate(Ks):
        tr = SphericalTrace(K=float(K), s=s, frames=frames[j], kappa=kappa)
        S_D = unit_area_D(tr)
        dK = min(float(central_angle(tr.A, tr.B)), x)
        out[j] = abs(S_D + sign * delta_area_formula(x, dK)) - x
    return out


def find_Qx(path: PlanarPath, x: float, bounds: SolverBounds, K_x: float | None = None,
            grid_size: int = QX_GRID, floor: float = QX_FLOOR,
            rtol: float = QX_RTOL, batch: int = 16):
    """Root Q_x of ``|S^R_x(K)| = K**-2 x`` below K_x.

    Returns ``(Q_x, apex_choice, diagnostics)``.  When several roots exist
    the one with the largest K is returned.

    Raises
    ------
    BracketFailure
        If f(K_x) is negative or no sign change is found above ``floor * K_x``.
    """
    if K_x is None:
        K_x = find_Kx(path, x, bounds)
    steps = bounds.steps
    tr_x = trace(path, K_x, steps)
    S_D = unit_area_D(tr_x)
    apex = "C1" if S_D >= 0.0 else "C2"
    # the base equals x at K_x by definition; the triangle area has a square
    # root singularity there, so it is not re-evaluated from the trace
    f_top = abs(S_D + (1.0 if apex == "C1" else -1.0) * x) - x
    diag = {"K_x": K_x, "f_Kx": f_top, "unit_S_D_Kx": S_D}
    tol = 1e-12 * x
    if f_top < -tol:
        raise BracketFailure(f"|S^R| K^2 - x = {f_top:.3g} < 0 at K_x", diagnostics=diag)
    if f_top <= tol:
        return K_x, apex, diag
    grid = K_x * np.geomspace(1.0, floor, grid_size)[1:]
    hi, lo = K_x, None
    for i in range(0, len(grid), batch):
        Ks = grid[i:i + batch]
        f = _f_values(path, Ks, x, apex, steps)
        neg = np.nonzero(f < 0.0)[0]
        if len(neg):
            j = neg[0]
            lo = Ks[j]
            if j > 0:
                hi = Ks[j - 1]
            break
        hi = Ks[-1]
    if lo is None:
        raise BracketFailure(f"no sign change of |S^R| K^2 - x above {floor:g} K_x",
                             diagnostics=diag)
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _f_values(path, [mid], x, apex, steps)[0] >= 0.0:
            hi = mid
        else:
            lo = mid
    diag["bracket"] = (lo, hi)
    return 0.5 * (lo + hi), apex, diag


def solve(path: PlanarPath, n: int, bounds: SolverBounds | None = None, *,
          steps=None, scan_resolution: int = SCAN_RESOLUTION,
          grid_size: int = QX_GRID) -> SolveResult:
    """Find Q_x for x = 2*pi/n and check it with the rolling-rotation closure.

    Raises
    ------
    XOutOfRange
        If 2*pi/n exceeds X (the error carries the threshold N).
    BracketFailure
        For n = 1, or if the area equation has no bracketed root.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if bounds is None:
        bounds = compute_bounds(path, scan_resolution, steps=steps)
    N = min_period(bounds)
    if n == 1:
        raise BracketFailure("no apex construction exists for n = 1", note=PERIOD_ONE_NOTE,
                             diagnostics={"N": N, "X": bounds.X})
    x = 2.0 * math.pi / n
    K_x = find_Kx(path, x, bounds)
    Q_x, apex, _ = find_Qx(path, x, bounds, K_x, grid_size=grid_size)
    tr = trace(path, Q_x, bounds.steps)
    areas = region_area_R(tr, x, apex, dK=x if Q_x == K_x else None)
    area_residual = abs(abs(areas.unit_S_R) - x)
    M = net_rotation(path, Q_x, bounds.steps).matrix
    config = {"steps": steps, "scan_resolution": scan_resolution, "grid_size": grid_size,
              "path": path.name, "samples": len(path.s)}
    return SolveResult(
        n=n, x=x, K_x=K_x, Q_x=Q_x, N=N, apex_choice=apex,
        area_residual=area_residual, rotation_residual=closure_residual(M, n),
        bounds=bounds, areas=areas, trace=tr, config=config,
    )
