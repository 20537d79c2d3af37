"""Isosceles apex construction and signed areas on the sphere.

Areas are computed on the unit sphere and scaled by K**-2 where a physical
value is wanted.  Orientation convention: a boundary traversed
counterclockwise as seen from outside the sphere encloses positive area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AntipodalEndpoints, FanPointDegenerate, NotConstructible
from .sphere_trace import SphericalTrace, central_angle

ANTIPODAL_TOL = 1e-9


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True)
class ApexPair:
    """Apexes C1, C2 of the two isosceles triangles over the base AB.

    C1 lies on the side of ``A x B`` (so A -> B -> C1 is counterclockwise),
    C2 is its mirror image through the plane OAB.
    """

    C1: np.ndarray
    C2: np.ndarray
    leg_angle: float
    apex_angle: float
    K: float = 1.0

    @property
    def leg_length(self) -> float:
        return self.leg_angle / self.K

    def apex(self, choice: str) -> np.ndarray:
        return {"C1": self.C1, "C2": self.C2}[choice]


@dataclass(frozen=True)
class RegionAreas:
    """Signed areas (length**2) of D_K, the triangle and their sum R."""

    S_D: float
    S_Delta: float
    S_R: float
    x: float
    K: float
    apex_choice: str

    @property
    def unit_S_R(self) -> float:
        return self.S_R * self.K ** 2

    @property
    def unit_S_D(self) -> float:
        return self.S_D * self.K ** 2

    @property
    def unit_S_Delta(self) -> float:
        return self.S_Delta * self.K ** 2


def isosceles_apexes(A, B, alpha: float, K: float = 1.0) -> ApexPair:
    """Points C equidistant from A and B with angle ``alpha`` at C.

    The base angles are kept at most pi/2, which fixes the leg angle to
    ``arcsin(sin(Kd/2) / sin(alpha/2))``.

    Raises
    ------
    NotConstructible
        If the base ``K d`` is longer than ``alpha``.
    AntipodalEndpoints
        If A and B are antipodal.
    """
    A, B = _unit(A), _unit(B)
    if not 0.0 < alpha < math.pi:
        raise ValueError(f"apex angle must lie in (0, pi), got {alpha}")
    cr = np.cross(A, B)
    ncr = float(np.linalg.norm(cr))
    dot = float(A @ B)
    if ncr < ANTIPODAL_TOL and dot < 0.0:
        raise AntipodalEndpoints("A and B are antipodal; the base arc is not unique")
    if ncr == 0.0:
        raise ValueError("A and B coincide")
    d = math.atan2(ncr, dot)
    if d > alpha:
        raise NotConstructible(f"base {d:.6g} exceeds apex angle {alpha:.6g}")
    ratio = min(1.0, math.sin(0.5 * d) / math.sin(0.5 * alpha))
    leg = math.asin(ratio)
    # distance h from the base midpoint M to the apex along the bisector
    cos_h = min(1.0, math.cos(leg) / math.cos(0.5 * d))
    sin_h = math.sqrt(max(0.0, 1.0 - cos_h * cos_h))
    M = _unit(A + B)
    N = cr / ncr
    return ApexPair(C1=cos_h * M + sin_h * N, C2=cos_h * M - sin_h * N,
                    leg_angle=leg, apex_angle=float(alpha), K=float(K))


def delta_area_formula(x: float, dK: float, K: float = 1.0) -> float:
    """Unsigned area of the isosceles triangle with apex angle x and base dK.

    ``K**-2 * (2 arcsin sqrt((1 + cos x) / (1 + cos dK)) + x - pi)``
    """
    if not 0.0 < x < math.pi:
        raise ValueError(f"x must lie in (0, pi), got {x}")
    if dK < 0.0 or dK > x:
        raise ValueError(f"base {dK} outside the constructible range [0, {x}]")
    r = math.sqrt((1.0 + math.cos(x)) / (1.0 + math.cos(dK)))
    return (2.0 * math.asin(min(1.0, r)) + x - math.pi) / K ** 2


def vertex_angle(v, a, b):
    """Interior angle at ``v`` between the great arcs towards ``a`` and ``b``."""
    v, a, b = (np.asarray(q, float) for q in (v, a, b))
    ta = a - (a @ v) * v
    tb = b - (b @ v) * v
    return math.atan2(float(np.linalg.norm(np.cross(ta, tb))), float(ta @ tb))


def spherical_excess(a, b, c) -> float:
    """Angle sum minus pi of the triangle abc, from measured vertex angles."""
    return vertex_angle(a, b, c) + vertex_angle(b, c, a) + vertex_angle(c, a, b) - math.pi


def signed_triangle_areas(P, a, b):
    """Signed areas of the triangles (P, a_i, b_i) with great-arc edges.

    Uses ``tan(E/2) = P.(a x b) / (1 + P.a + a.b + b.P)``.
    """
    num = np.cross(a, b) @ P
    den = 1.0 + a @ P + np.sum(a * b, axis=-1) + b @ P
    return 2.0 * np.arctan2(num, den)


def _fan_point(pts):
    c = pts.mean(axis=0)
    if np.linalg.norm(c) > 1e-6:
        return c / np.linalg.norm(c)
    # symmetric boundaries (e.g. great circles) have no usable centroid;
    # fall back on the boundary's area vector
    w = np.cross(pts, np.roll(pts, -1, axis=0)).sum(axis=0)
    if np.linalg.norm(w) > 1e-9:
        return w / np.linalg.norm(w)
    raise FanPointDegenerate("boundary centroid and area vector both vanish")


def signed_region_area(boundary, fan_point=None) -> float:
    """Winding-weighted signed area (unit sphere) enclosed by a closed polyline.

    ``boundary`` is a sequence of unit vectors joined by minor great arcs; it
    may repeat the first point at the end.  The area is accumulated over
    triangles fanned from ``fan_point`` (default: the normalised centroid),
    so the antipode of the fan point is assigned winding number zero.
    Self-intersecting boundaries count each region with its winding number.
    """
    pts = _unit(np.asarray(boundary, dtype=float))
    if len(pts) < 3:
        raise ValueError("boundary needs at least 3 points")
    if np.linalg.norm(pts[0] - pts[-1]) < 1e-9:
        pts = pts[:-1]
    P = _fan_point(pts) if fan_point is None else _unit(fan_point)
    if np.min(pts @ P) < -1.0 + 1e-9:
        raise FanPointDegenerate("a boundary vertex is antipodal to the fan point")
    nxt = np.roll(pts, -1, axis=0)
    return float(np.sum(signed_triangle_areas(P, pts, nxt)))


def turning_angles(boundary):
    """Signed turning (exterior) angle at each vertex of a closed polygon; left is positive."""
    pts = _unit(np.asarray(boundary, dtype=float))
    if np.linalg.norm(pts[0] - pts[-1]) < 1e-9:
        pts = pts[:-1]
    prev = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    t_in = pts - prev
    t_in = t_in - np.sum(t_in * pts, axis=-1, keepdims=True) * pts
    t_out = nxt - pts
    t_out = t_out - np.sum(t_out * pts, axis=-1, keepdims=True) * pts
    return np.arctan2(np.sum(pts * np.cross(t_in, t_out), axis=-1),
                      np.sum(t_in * t_out, axis=-1))


def gauss_bonnet_area(boundary) -> float:
    """Area to the left of a simple closed polygon, from its turning angles."""
    return 2.0 * math.pi - float(np.sum(turning_angles(boundary)))


def great_arc(a, b, n: int):
    """``n`` points along the minor great arc from a to b, endpoints included."""
    a, b = _unit(a), _unit(b)
    omega = float(central_angle(a, b))
    if omega < 1e-15:
        return np.repeat(a[None, :], n, axis=0)
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (np.sin((1.0 - t) * omega) * a + np.sin(t * omega) * b) / math.sin(omega)


def chord_correction(points, kappa_g):
    """Area between a smooth curve and its chord polygon, on the unit sphere.

    Each chord of angle l under a curve of geodesic curvature k (unit
    sphere) cuts off about ``k l**3 / 12``; ``kappa_g`` is given per segment.
    """
    ell = central_angle(points[:-1], points[1:])
    return float(np.sum(kappa_g * ell ** 3) / 12.0)


def _segment_curvature(tr: SphericalTrace):
    return 0.5 * (tr.kappa[:-1] + tr.kappa[1:]) / tr.K


def unit_area_D(tr: SphericalTrace, p=None) -> float:
    """Signed area (unit sphere) of the region between T_K* and the arc B -> A."""
    p = tr.p if p is None else p
    A, B = p[0], p[-1]
    if float(np.linalg.norm(np.cross(A, B))) < ANTIPODAL_TOL and float(A @ B) < 0.0:
        raise AntipodalEndpoints("trace endpoints are antipodal; the closing arc is ambiguous")
    omega = float(central_angle(A, B))
    mean_step = float(np.mean(central_angle(p[:-1], p[1:])))
    n_arc = max(2, int(math.ceil(omega / max(mean_step, 1e-12))) + 1)
    closing = great_arc(B, A, n_arc)[1:-1]
    boundary = np.concatenate([p, closing])
    area = signed_region_area(boundary)
    return area + chord_correction(p, _segment_curvature(tr))


def region_area_D(tr: SphericalTrace) -> float:
    """Signed area S^D (length**2) of the region bounded by T_K* and the shorter arc BA."""
    return unit_area_D(tr) / tr.K ** 2


def region_area_R(tr: SphericalTrace, x: float, apex_choice: str = "C1",
                  S_D: float | None = None, dK: float | None = None) -> RegionAreas:
    """Signed areas of D_K, the triangle ABC and R = D + triangle.

    The triangle A -> B -> C is counterclockwise for C1 and clockwise for
    C2, so the two choices give triangle areas of equal magnitude and
    opposite sign.

    ``dK`` overrides the measured base angle; at K = K_x it is x by
    definition, and the area formula has a square-root singularity there
    that would amplify rounding in the measured value.

    Raises
    ------
    NotConstructible
        If ``K d_T(K) > x``.
    """
    if apex_choice not in ("C1", "C2"):
        raise ValueError(f"apex_choice must be 'C1' or 'C2', got {apex_choice!r}")
    K = tr.K
    if dK is None:
        dK = float(central_angle(tr.A, tr.B))
    if dK > x:
        if dK > x * (1.0 + 1e-12):
            raise NotConstructible(f"K d_T = {dK:.12g} exceeds x = {x:.12g}")
        dK = x
    if S_D is None:
        S_D = region_area_D(tr)
    sign = 1.0 if apex_choice == "C1" else -1.0
    S_Delta = sign * delta_area_formula(x, dK, K)
    return RegionAreas(S_D=S_D, S_Delta=S_Delta, S_R=S_D + S_Delta, x=x, K=K,
                       apex_choice=apex_choice)
