"""Planar periodic paths described by their curvature-arclength function.

A :class:`PlanarPath` holds one period of a path with translation symmetry.
Curvature is stored at arclength nodes and is linearly interpolated between
them everywhere in the package, so the tangent angle is piecewise quadratic
and can be evaluated exactly.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .errors import (
    DegeneratePath,
    NonMonotoneSamples,
    RoughCurvatureWarning,
    TangentMismatch,
    ZeroDisplacement,
)

ANGLE_TOL = 1e-6
DISPLACEMENT_TOL = 1e-9
JUMP_THRESHOLD = 0.25
POLYLINE_FIT_TOL = 1e-3

# 4-point Gauss-Legendre nodes/weights on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def wrap_angle(a):
    """Map angles onto (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class PlanarPath:
    """One period T* of a periodic planar path.

    Attributes
    ----------
    s : ndarray
        Strictly increasing arclength nodes, ``s[0] == 0`` and ``s[-1] == L``.
    kappa : ndarray
        Signed curvature at the nodes (positive turns left).
    start_point, start_angle :
        Position and tangent direction at ``s = 0``.
    points : ndarray
        Node positions reconstructed from the Frenet equations.
    end_point : ndarray
        Endpoint of the period.
    displacement : float
        Euclidean distance between the endpoints (d0).
    """

    s: np.ndarray
    kappa: np.ndarray
    start_point: np.ndarray
    start_angle: float
    points: np.ndarray
    end_point: np.ndarray
    displacement: float
    name: str = ""

    @property
    def period_length(self) -> float:
        return float(self.s[-1])

    L = period_length

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.s.tolist(), self.kappa.tolist()))

    @property
    def start_tangent(self) -> np.ndarray:
        return np.array([math.cos(self.start_angle), math.sin(self.start_angle)])

    @property
    def total_turning(self) -> float:
        return float(np.sum(0.5 * (self.kappa[1:] + self.kappa[:-1]) * np.diff(self.s)))

    @property
    def end_tangent(self) -> np.ndarray:
        a = self.start_angle + self.total_turning
        return np.array([math.cos(a), math.sin(a)])

    def kappa_at(self, s):
        return np.interp(s, self.s, self.kappa)

    def tangent_angle(self, s):
        """Exact tangent angle of the linear-curvature model at arclength ``s``."""
        s = np.asarray(s, dtype=float)
        theta = _node_angles(self.s, self.kappa, self.start_angle)
        i = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s) - 2)
        h = self.s[i + 1] - self.s[i]
        tau = s - self.s[i]
        k0 = self.kappa[i]
        dk = self.kappa[i + 1] - k0
        return theta[i] + k0 * tau + dk * tau * tau / (2.0 * h)

    def position_at(self, s):
        """Positions at arbitrary arclengths (same curvature model as ``points``)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        i = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s) - 2)
        tau = s - self.s[i]
        q = self.s[i][:, None] + tau[:, None] * _GL_X[None, :]
        th = self.tangent_angle(q.ravel()).reshape(q.shape)
        dx = tau * (np.cos(th) @ _GL_W)
        dy = tau * (np.sin(th) @ _GL_W)
        return self.points[i] + np.column_stack([dx, dy])

    def canonical_points(self, s=None) -> np.ndarray:
        """Positions moved so the path starts at the origin heading along +x."""
        pts = self.points if s is None else self.position_at(s)
        c, sn = math.cos(self.start_angle), math.sin(self.start_angle)
        rot = np.array([[c, sn], [-sn, c]])
        return (pts - self.start_point) @ rot.T


def _node_angles(s, kappa, theta0):
    inc = 0.5 * (kappa[1:] + kappa[:-1]) * np.diff(s)
    return theta0 + np.concatenate(([0.0], np.cumsum(inc)))


def _frenet_points(s, kappa, theta0, p0):
    h = np.diff(s)
    theta = _node_angles(s, kappa, theta0)
    tau = h[:, None] * _GL_X[None, :]
    dk = (kappa[1:] - kappa[:-1])[:, None]
    th = theta[:-1, None] + kappa[:-1, None] * tau + dk * tau * tau / (2.0 * h[:, None])
    dx = h * (np.cos(th) @ _GL_W)
    dy = h * (np.sin(th) @ _GL_W)
    pts = np.empty((len(s), 2))
    pts[0] = p0
    pts[1:, 0] = p0[0] + np.cumsum(dx)
    pts[1:, 1] = p0[1] + np.cumsum(dy)
    return pts


def _warn_if_rough(kappa, L, threshold):
    if len(kappa) < 2:
        return
    scale = max(float(np.max(np.abs(kappa))), 2.0 * math.pi / L)
    jump = float(np.max(np.abs(np.diff(kappa))))
    if jump > threshold * scale:
        warnings.warn(
            f"curvature jumps by {jump:.3g} between neighbouring samples "
            f"(scale {scale:.3g}); the path is not resolved as a smooth curve",
            RoughCurvatureWarning,
            stacklevel=3,
        )


def _assemble(s, kappa, start_point, start_angle, *, allow_open, angle_tol,
              jump_threshold, name, end_point=None):
    L = float(s[-1])
    points = _frenet_points(s, kappa, start_angle, start_point)
    if end_point is None:
        end_point = points[-1].copy()
    turning = float(np.sum(0.5 * (kappa[1:] + kappa[:-1]) * np.diff(s)))
    if not allow_open and abs(float(wrap_angle(turning))) > angle_tol:
        raise TangentMismatch(
            f"start and end tangents differ by {float(wrap_angle(turning)):.3g} rad "
            f"(total turning {turning:.6g}); pass allow_open=True for a non-periodic curve"
        )
    d0 = float(np.hypot(*(end_point - start_point)))
    if d0 <= DISPLACEMENT_TOL * L:
        raise ZeroDisplacement(f"net displacement {d0:.3g} over one period is zero")
    _warn_if_rough(kappa, L, jump_threshold)
    return PlanarPath(
        s=s, kappa=kappa, start_point=start_point, start_angle=float(start_angle),
        points=points, end_point=np.asarray(end_point, dtype=float),
        displacement=d0, name=name,
    )


def path_from_curvature(samples, L=None, *, start_point=(0.0, 0.0), start_angle=0.0,
                        allow_open=False, angle_tol=ANGLE_TOL,
                        jump_threshold=JUMP_THRESHOLD, name="") -> PlanarPath:
    """Build a path from ``(s, kappa)`` samples by integrating the Frenet equations.

    Raises
    ------
    NonMonotoneSamples
        If the arclengths are not strictly increasing or do not cover ``[0, L]``.
    TangentMismatch
        If the total turning is not a multiple of 2*pi (unless ``allow_open``).
    ZeroDisplacement
        If the endpoints coincide.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 2:
        raise NonMonotoneSamples("samples must be a list of at least two (s, kappa) pairs")
    s = arr[:, 0].copy()
    kappa = arr[:, 1].copy()
    if not np.all(np.isfinite(arr)):
        raise NonMonotoneSamples("samples contain non-finite values")
    if np.any(np.diff(s) <= 0.0):
        raise NonMonotoneSamples("arclength samples must be strictly increasing")
    if L is None:
        L = s[-1]
    L = float(L)
    if L <= 0.0:
        raise NonMonotoneSamples("period length must be positive")
    if abs(s[0]) > 1e-12 * L or abs(s[-1] - L) > 1e-9 * L:
        raise NonMonotoneSamples(f"samples cover [{s[0]}, {s[-1]}], expected [0, {L}]")
    s[0], s[-1] = 0.0, L
    return _assemble(
        s, kappa, np.asarray(start_point, dtype=float), float(start_angle),
        allow_open=allow_open, angle_tol=angle_tol,
        jump_threshold=jump_threshold, name=name,
    )


def path_from_polyline(vertices, closed_period=True, *, allow_open=False,
                       angle_tol=ANGLE_TOL, jump_threshold=JUMP_THRESHOLD,
                       fit_tol=POLYLINE_FIT_TOL, name="") -> PlanarPath:
    """Discretise one period given as polyline vertices.

    Curvature at a vertex is the turning angle divided by the mean length of
    the two adjacent segments.  With ``closed_period`` the polyline is taken
    to continue periodically, so the endpoint curvature comes from the turn
    between the last segment and the (translated) first one.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise DegeneratePath("need at least 3 planar vertices")
    seg = np.diff(v, axis=0)
    h = np.hypot(seg[:, 0], seg[:, 1])
    total = float(np.sum(h))
    if total <= 0.0 or np.any(h <= 1e-12 * total):
        raise DegeneratePath("polyline has coincident consecutive vertices")

    def turn(a, b):
        return np.arctan2(a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
                          np.sum(a * b, axis=-1))

    phi = turn(seg[:-1], seg[1:])
    if np.any(np.abs(phi) > math.pi - 1e-9):
        raise DegeneratePath("polyline folds back on itself")
    kappa = np.empty(len(v))
    kappa[1:-1] = phi / (0.5 * (h[:-1] + h[1:]))
    if closed_period:
        phi_j = float(turn(seg[-1], seg[0]))
        kappa[0] = kappa[-1] = phi_j / (0.5 * (h[-1] + h[0]))
    else:
        kappa[0], kappa[-1] = kappa[1], kappa[-2]
        if not allow_open:
            mismatch = float(turn(seg[0], seg[-1]))
            if abs(mismatch) > angle_tol:
                raise TangentMismatch(
                    f"first and last segments differ in direction by {mismatch:.3g} rad")
    s = np.concatenate(([0.0], np.cumsum(h)))
    theta0 = math.atan2(seg[0, 1], seg[0, 0]) - h[0] * (2.0 * kappa[0] + kappa[1]) / 6.0
    path = _assemble(
        s, kappa, v[0].copy(), theta0, allow_open=allow_open or not closed_period,
        angle_tol=angle_tol, jump_threshold=jump_threshold, name=name,
        end_point=v[-1].copy(),
    )
    miss = float(np.hypot(*(path.points[-1] - v[-1])))
    if miss > fit_tol * total:
        warnings.warn(
            f"smooth reconstruction misses the last vertex by {miss:.3g}; "
            "the polyline is too coarse for its curvature",
            RoughCurvatureWarning, stacklevel=2,
        )
    return path


def resample(path: PlanarPath, n_samples: int) -> PlanarPath:
    """Resample curvature onto ``n_samples`` uniform arclength nodes.

    Plain linear interpolation cuts the corners of the piecewise linear
    curvature at the old nodes, which biases the tangent angle by O(h**2)
    along the whole period.  The interpolant is corrected by the derivative
    of that tangent-angle defect, then shifted by a constant so the total
    turning is unchanged.
    """
    if n_samples < 16:
        raise ValueError(f"n_samples must be at least 16, got {n_samples}")
    L = path.period_length
    s = np.linspace(0.0, L, n_samples)
    kappa = np.interp(s, path.s, path.kappa)
    h = np.diff(s)
    theta_lin = np.concatenate(([0.0], np.cumsum(0.5 * (kappa[1:] + kappa[:-1]) * h)))
    defect = path.tangent_angle(s) - path.start_angle - theta_lin
    kappa = kappa + np.gradient(defect, s, edge_order=2)
    turning = float(np.sum(0.5 * (kappa[1:] + kappa[:-1]) * h))
    kappa += (path.total_turning - turning) / L
    return _assemble(
        s, kappa, path.start_point.copy(), path.start_angle, allow_open=True,
        angle_tol=ANGLE_TOL, jump_threshold=np.inf, name=path.name,
    )


def aligned_hausdorff(a: PlanarPath, b: PlanarPath) -> float:
    """Hausdorff distance after moving both paths to the canonical start frame."""
    L = min(a.period_length, b.period_length)
    s = np.union1d(a.s[a.s <= L], b.s[b.s <= L])
    pa, pb = a.canonical_points(s), b.canonical_points(s)
    return max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])


def path_from_spec(spec: dict, **kwargs) -> PlanarPath:
    """Build a path from a parsed path-spec document (see :func:`load_path`)."""
    if not isinstance(spec, dict):
        raise ValueError("path spec must be a JSON object")
    if "type" not in spec:
        raise ValueError("path spec is missing key 'type'")
    kind = spec["type"]
    name = str(spec.get("name", ""))
    if kind == "polyline":
        if "vertices" not in spec:
            raise ValueError("polyline path spec is missing key 'vertices'")
        return path_from_polyline(spec["vertices"], name=name, **kwargs)
    if kind == "curvature":
        for key in ("L", "samples"):
            if key not in spec:
                raise ValueError(f"curvature path spec is missing key '{key}'")
        if not isinstance(spec["L"], (int, float)) or isinstance(spec["L"], bool):
            raise ValueError("key 'L' must be a number")
        return path_from_curvature(spec["samples"], spec["L"], name=name, **kwargs)
    raise ValueError(f"key 'type' has unknown value {kind!r}")


def load_path(filename, **kwargs) -> PlanarPath:
    """Read a path-spec JSON file.

    Accepted documents::

        {"type": "polyline", "vertices": [[x, y], ...]}
        {"type": "curvature", "L": 1.0, "samples": [[s, kappa], ...]}
    """
    text = Path(filename).read_text(encoding="utf-8")
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{filename}: line {exc.lineno}: {exc.msg}") from exc
    path = path_from_spec(spec, **kwargs)
    if not path.name:
        object.__setattr__(path, "name", Path(filename).stem)
    return path


def path_to_spec(path: PlanarPath) -> dict:
    return {"type": "curvature", "name": path.name, "L": path.period_length,
            "samples": [[float(a), float(b)] for a, b in zip(path.s, path.kappa)]}
