"""Closed contact curve and the convex trajectoid mesh.

n copies of the trace, rotated about the apex axis OC in steps of 2*pi/n,
join into a closed curve on the unit sphere.  The solid is the intersection
of the half-spaces ``y . p <= r**2`` over curve samples ``p`` scaled to the
sphere radius ``r = 1/K``.  It is built through convex-hull duality: with the
origin inside, the planes ``y . q = 1`` (q = p / r) are dual to the points q,
so every facet of the hull of the q's is a vertex of the solid and every q
is a face.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError, cKDTree
from scipy.spatial.transform import Rotation

from .errors import (
    AntipodalEndpoints,
    DegenerateHull,
    JunctionGap,
    NotConstructible,
    TangentKink,
)
from .path_model import PlanarPath
from .solver import ROTATION_GATE
from .sphere_trace import SphericalTrace, closure_residual, net_rotation, trace
from .spherical_geometry import (
    chord_correction,
    gauss_bonnet_area,
    isosceles_apexes,
    signed_region_area,
    unit_area_D,
)

GAP_TOL = 1e-8
KINK_TOL = 1e-5
SYMMETRY_TOL = 1e-8
AREA_TOL = 1e-6
HALVING_TOL = 1e-6
CONVEX_TOL = 1e-7
INRADIUS_RTOL = 1e-6
SUPPORT_TOL = 1e-7
SAMPLES_PER_COPY = 2048
MIN_MESH_SAMPLES = 64


def _wrap_area(a):
    """Reduce an area on the unit sphere to [0, 4 pi).

    A loop and its reverse bound complementary regions, so the target 2 pi
    sits in the middle of this range for either orientation.
    """
    return a % (4.0 * math.pi)


def _tangent_angle(p, a, b):
    """Angle between tangent vectors a, b at the point p of the unit sphere."""
    a = a - (a @ p) * p
    b = b - (b @ p) * p
    return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(a @ b))


@dataclass(frozen=True, eq=False)
class ClosedSphericalCurve:
    """n rotated copies of a trace joined into one loop on the unit sphere.

    ``points`` has ``n * m`` rows, copy i occupying rows ``i*m`` to
    ``(i+1)*m - 1``; the loop closes from the last row back to the first.
    ``kappa_g`` is the geodesic curvature (unit sphere) at each point.
    """

    points: np.ndarray
    tangents: np.ndarray
    kappa_g: np.ndarray
    axis: np.ndarray
    n: int
    K: float
    m: int
    junction_gap: float
    tangent_kink: float
    great_circle: bool = False

    @property
    def radius(self) -> float:
        return 1.0 / self.K

    def rotation_step(self) -> Rotation:
        return Rotation.from_rotvec(2.0 * math.pi / self.n * self.axis)

    def symmetry_residual(self) -> float:
        """Largest distance between the curve rotated by 2 pi/n and itself shifted one copy."""
        rotated = self.rotation_step().apply(self.points)
        return float(np.max(np.linalg.norm(rotated - np.roll(self.points, -self.m, axis=0), axis=1)))

    def closure_gap(self) -> float:
        return float(np.linalg.norm(self.points[-1] - self.points[0]))

    def _segment_curvature(self):
        return 0.5 * (self.kappa_g + np.roll(self.kappa_g, -1))

    def enclosed_area(self) -> float:
        """Winding-weighted signed area (unit sphere), reduced to [0, 4 pi)."""
        loop = np.vstack([self.points, self.points[:1]])
        area = signed_region_area(loop) + chord_correction(loop, self._segment_curvature())
        return _wrap_area(area)

    def gauss_bonnet_area(self) -> float:
        """Area to the left of the curve from its turning, reduced to [0, 4 pi)."""
        loop = np.vstack([self.points, self.points[:1]])
        area = gauss_bonnet_area(self.points) + chord_correction(loop, self._segment_curvature())
        return _wrap_area(area)

    def area_residual(self) -> float:
        return abs(self.enclosed_area() - 2.0 * math.pi)

    def halving_residual(self) -> float:
        """``|A_left - A_right| / 4 pi`` with A_left from Gauss-Bonnet."""
        a = self.gauss_bonnet_area()
        return abs(a - (4.0 * math.pi - a)) / (4.0 * math.pi)

    def report(self) -> dict:
        return {
            "n": self.n, "K": self.K,
            "junction_gap": self.junction_gap,
            "tangent_kink": self.tangent_kink,
            "symmetry_residual": self.symmetry_residual(),
            "enclosed_area": self.enclosed_area(),
            "area_residual": self.area_residual(),
            "halving_residual": self.halving_residual(),
        }


def _great_circle_curve(tr: SphericalTrace, n: int) -> ClosedSphericalCurve:
    pole = np.cross(tr.p[0], tr.t[0])
    pole /= np.linalg.norm(pole)
    m = max(len(tr.s) - 1, 2)
    ang = 2.0 * math.pi * np.arange(n * m) / (n * m)
    e1, e2 = tr.p[0], tr.t[0]
    pts = np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2
    tan = -np.sin(ang)[:, None] * e1 + np.cos(ang)[:, None] * e2
    return ClosedSphericalCurve(points=pts, tangents=tan, kappa_g=np.zeros(n * m), axis=pole,
                                n=n, K=tr.K, m=m, junction_gap=0.0, tangent_kink=0.0,
                                great_circle=True)


def assemble_closed_curve(tr: SphericalTrace, n: int, apex_choice: str = "C1",
                          x: float | None = None, gap_tol: float = GAP_TOL,
                          kink_tol: float = KINK_TOL) -> ClosedSphericalCurve:
    """Rotate ``n`` copies of the trace about the apex axis and join them.

    A geodesic trace (zero curvature) closes along its own great circle; the
    copies are then arcs of that circle.

    Raises
    ------
    JunctionGap
        If consecutive copies miss each other by more than ``gap_tol``.
    NotConstructible
        If the trace endpoints are further apart than x.

    Warns
    -----
    TangentKink
        If the tangent turns by more than ``kink_tol`` at a junction.
    """
    if n < 2:
        raise ValueError("need n >= 2 copies")
    x = 2.0 * math.pi / n if x is None else x
    if not np.any(tr.kappa):
        return _great_circle_curve(tr, n)
    C = isosceles_apexes(tr.A, tr.B, x, tr.K).apex(apex_choice)
    # rotation sense that carries A to B
    sense = min((1.0, -1.0), key=lambda sg: float(np.linalg.norm(
        Rotation.from_rotvec(sg * x * C).apply(tr.A) - tr.B)))
    axis = sense * C
    m = len(tr.s) - 1
    rots = [Rotation.from_rotvec(i * x * axis) for i in range(n + 1)]
    copies = [r.apply(tr.p) for r in rots[:n]]
    tcopies = [r.apply(tr.t) for r in rots[:n]]
    gap = kink = 0.0
    for i in range(n):
        end_p, end_t = copies[i][-1], tcopies[i][-1]
        nxt = rots[i + 1]
        start_p, start_t = nxt.apply(tr.A), nxt.apply(tr.t[0])
        gap = max(gap, float(np.linalg.norm(end_p - start_p)))
        kink = max(kink, _tangent_angle(end_p, end_t, start_t))
    if gap > gap_tol:
        raise JunctionGap(f"copies miss each other by {gap:.3g} (tolerance {gap_tol:g})")
    if kink > kink_tol:
        warnings.warn(f"tangent turns by {kink:.3g} rad at the copy junctions",
                      TangentKink, stacklevel=2)
    pts = np.concatenate([c[:-1] for c in copies])
    tans = np.concatenate([c[:-1] for c in tcopies])
    kg = np.tile(tr.kappa[:-1] / tr.K, n)
    return ClosedSphericalCurve(points=pts, tangents=tans, kappa_g=kg, axis=axis, n=n, K=tr.K,
                                m=m, junction_gap=gap, tangent_kink=kink)


@dataclass(frozen=True, eq=False)
class MeshReport:
    watertight: bool
    euler_characteristic: int
    convexity_violation: float
    inscribed_radius: float
    inscribed_radius_error: float
    support_residual: float
    volume: float
    tolerances: dict = field(default_factory=dict)

    def failures(self) -> list[str]:
        tol = self.tolerances
        r = self.inscribed_radius
        out = []
        if not self.watertight:
            out.append("watertight")
        if self.euler_characteristic != 2:
            out.append("euler_characteristic")
        if self.convexity_violation > tol["convex"] * r:
            out.append("convexity")
        if self.inscribed_radius_error > tol["inradius"]:
            out.append("inscribed_radius")
        if self.support_residual > tol["support"] * r:
            out.append("support")
        return out

    @property
    def passed(self) -> bool:
        return not self.failures()

    def as_dict(self) -> dict:
        return {
            "watertight": self.watertight,
            "euler_characteristic": self.euler_characteristic,
            "convexity_violation": self.convexity_violation,
            "inscribed_radius": self.inscribed_radius,
            "inscribed_radius_error": self.inscribed_radius_error,
            "support_residual": self.support_residual,
            "volume": self.volume,
            "failures": self.failures(),
        }


@dataclass(frozen=True, eq=False)
class TrajectoidMesh:
    """Triangulated convex solid.

    Triangles are grouped into planar faces (``face_of[j]`` is the face of
    triangle j); face k lies in the plane ``normals[k] . y = offsets[k]``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    face_of: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    inscribed_radius: float
    contact_points: np.ndarray
    provenance: dict = field(default_factory=dict)

    def edges(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return e

    def is_watertight(self) -> bool:
        """Each directed edge appears once and its reverse once."""
        e = self.edges()
        nv = len(self.vertices)
        fwd = e[:, 0].astype(np.int64) * nv + e[:, 1]
        rev = e[:, 1].astype(np.int64) * nv + e[:, 0]
        if len(np.unique(fwd)) != len(fwd):
            return False
        return bool(np.array_equal(np.sort(fwd), np.sort(rev)))

    def euler_characteristic(self) -> int:
        e = np.sort(self.edges(), axis=1)
        n_edges = len(np.unique(e, axis=0))
        n_verts = len(np.unique(self.triangles))
        return n_verts - n_edges + len(self.triangles)

    def volume(self) -> float:
        v = self.vertices[self.triangles]
        return float(np.sum(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2]))) / 6.0)

    def triangle_normals(self):
        v = self.vertices[self.triangles]
        nrm = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        return nrm / np.linalg.norm(nrm, axis=1, keepdims=True)

    def convexity_violation(self, chunk: int = 2048) -> float:
        """Largest signed distance of any vertex outside any face plane."""
        worst = -math.inf
        for i in range(0, len(self.vertices), chunk):
            d = self.vertices[i:i + chunk] @ self.normals.T - self.offsets
            worst = max(worst, float(d.max()))
        return worst

    def support_residual(self, points=None, chunk: int = 2048) -> float:
        """Largest distance from a contact point to its nearest face plane."""
        pts = self.contact_points if points is None else np.asarray(points, float)
        worst = 0.0
        for i in range(0, len(pts), chunk):
            d = np.abs(pts[i:i + chunk] @ self.normals.T - self.offsets)
            worst = max(worst, float(d.min(axis=1).max()))
        return worst

    def check(self, convex_tol=CONVEX_TOL, inradius_rtol=INRADIUS_RTOL,
              support_tol=SUPPORT_TOL) -> MeshReport:
        r = self.inscribed_radius
        measured = float(np.min(self.offsets))
        return MeshReport(
            watertight=self.is_watertight(),
            euler_characteristic=self.euler_characteristic(),
            convexity_violation=self.convexity_violation(),
            inscribed_radius=r,
            inscribed_radius_error=abs(measured - r) / r,
            support_residual=self.support_residual(),
            volume=self.volume(),
            tolerances={"convex": convex_tol, "inradius": inradius_rtol, "support": support_tol},
        )


def _subsample(curve: ClosedSphericalCurve, per_copy: int):
    if per_copy is None or per_copy >= curve.m:
        return curve.points
    idx = np.round(np.linspace(0, curve.m, per_copy, endpoint=False)).astype(int)
    idx = (np.arange(curve.n)[:, None] * curve.m + idx[None, :]).ravel()
    return curve.points[idx]


def _face_rings(simplices, n_points):
    """For each hull vertex, its incident facets in counterclockwise order."""
    nxt = {}
    for f, (a, b, c) in enumerate(simplices):
        nxt[(a, b)] = (c, f)
        nxt[(b, c)] = (a, f)
        nxt[(c, a)] = (b, f)
    start = {}
    for (i, j) in nxt:
        start.setdefault(i, j)
    rings = []
    for i in range(n_points):
        if i not in start:
            rings.append([])
            continue
        j0 = j = start[i]
        ring = []
        while True:
            k, f = nxt[(i, j)]
            ring.append(f)
            j = k
            if j == j0:
                break
            if len(ring) > len(simplices):
                raise DegenerateHull("hull facets do not form a closed ring")
        rings.append(ring)
    return rings


def mesh_from_normals(normals, radius: float, contact_points=None,
                      provenance=None, merge_tol: float = 1e-10) -> TrajectoidMesh:
    """Intersection of the half-spaces ``y . q <= radius`` for unit vectors q.

    Raises
    ------
    DegenerateHull
        If the intersection is unbounded (the directions do not surround
        the origin) or the hull computation fails.
    """
    q = np.asarray(normals, dtype=float)
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    if len(q) < 4:
        raise DegenerateHull("unbounded body: fewer than 4 tangent planes")
    try:
        hull = ConvexHull(q)
    except QhullError as exc:
        raise DegenerateHull(f"unbounded body: tangent directions are degenerate ({exc.args[0].splitlines()[0]})") from exc
    w, b = hull.equations[:, :3], hull.equations[:, 3]
    if np.any(-b <= 1e-9):
        raise DegenerateHull("unbounded body: the tangent directions do not surround the origin")
    # facet w.z + b = 0 is the primal vertex w / (-b), scaled by the radius
    verts = radius * w / (-b)[:, None]
    simplices = hull.simplices.copy()
    # orient facets counterclockwise seen from outside
    v = q[simplices]
    flip = np.einsum("ij,ij->i", np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), w) < 0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]

    # merge coincident primal vertices (coplanar dual facets)
    pairs = cKDTree(verts).query_pairs(merge_tol * radius, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                       shape=(len(verts), len(verts)))
    _, rep = connected_components(graph, directed=False)
    # representative of each group: its lowest index, so order is kept
    first = np.full(rep.max() + 1, len(verts))
    np.minimum.at(first, rep, np.arange(len(verts)))
    rep = first[rep]
    used, rep = np.unique(rep, return_inverse=True)
    verts = verts[used]

    tris, face_of, face_normals, face_offsets, face_q = [], [], [], [], []
    for i, ring in enumerate(_face_rings(simplices, len(q))):
        poly = [int(rep[f]) for f in ring]
        # drop repeats left by merging
        poly = [a for k, a in enumerate(poly) if a != poly[k - 1]]
        if len(poly) < 3:
            continue
        fid = len(face_normals)
        for k in range(1, len(poly) - 1):
            tris.append((poly[0], poly[k], poly[k + 1]))
            face_of.append(fid)
        face_normals.append(q[i])
        face_offsets.append(radius)
        face_q.append(i)
    tris = np.array(tris, dtype=np.int64)
    # faces are planes y.q = radius by construction; record the plane fitted
    # to the face's vertices instead so the invariants are measured, not assumed
    face_of = np.array(face_of)
    nrm, off = _fit_planes(verts, tris, face_of, len(face_normals))
    if contact_points is None:
        contact_points = radius * q
    mesh = TrajectoidMesh(vertices=verts, triangles=tris, face_of=face_of, normals=nrm,
                          offsets=off, inscribed_radius=float(radius),
                          contact_points=np.asarray(contact_points, float),
                          provenance=dict(provenance or {}))
    return mesh


def _fit_planes(verts, tris, face_of, n_faces):
    """Newell normal and mean offset of each face polygon."""
    v = verts[tris]
    area_vec = 0.5 * np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    nrm = np.zeros((n_faces, 3))
    np.add.at(nrm, face_of, area_vec)
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    cnt = np.zeros(n_faces)
    acc = np.zeros(n_faces)
    d = np.einsum("ijk,ik->ij", v, nrm[face_of]).mean(axis=1)
    np.add.at(acc, face_of, d)
    np.add.at(cnt, face_of, 1.0)
    return nrm, acc / cnt


def build_mesh(curve: ClosedSphericalCurve, samples_per_copy: int = SAMPLES_PER_COPY,
               provenance=None) -> TrajectoidMesh:
    """Convex solid bounded by the tangent planes of the sphere along ``curve``.

    Raises
    ------
    DegenerateHull
        For a curve on a single great circle (the solid is an unbounded
        cylinder) or any other set of tangent planes that leaves it open.
    """
    pts = _subsample(curve, samples_per_copy)
    if len(pts) < MIN_MESH_SAMPLES:
        raise ValueError(f"need at least {MIN_MESH_SAMPLES} curve samples, got {len(pts)}")
    if curve.great_circle:
        raise DegenerateHull("unbounded body: the curve is a great circle, so the "
                             "tangent planes bound a cylinder")
    r = curve.radius
    prov = {"n": curve.n, "K": curve.K, "samples": len(pts)}
    prov.update(provenance or {})
    return mesh_from_normals(pts, r, contact_points=r * pts, provenance=prov)


VERIFY_GATES = {
    "junction_gap": GAP_TOL,
    "tangent_kink": KINK_TOL,
    "symmetry_residual": SYMMETRY_TOL,
    "area_residual": AREA_TOL,
    "halving_residual": HALVING_TOL,
    "rotation_residual": ROTATION_GATE,
}


def verify_period(path: PlanarPath, K: float, n: int, apex_choice: str | None = None,
                  steps=None) -> dict:
    """Closure residuals of the period-n construction at inverse radius K.

    Never raises for a bad K: an unconstructible apex is reported as
    ``constructible: False`` with the curve residuals left as None.  The
    apex defaults to the sign rule (C1 when S^D >= 0).
    """
    tr = trace(path, K, steps)
    M = net_rotation(path, K, steps).matrix
    out = {"K": float(K), "n": int(n), "constructible": True, "apex_choice": apex_choice,
           "rotation_residual": closure_residual(M, n)}
    for key in ("junction_gap", "tangent_kink", "symmetry_residual", "enclosed_area",
                "enclosed_area_target", "area_residual", "halving_residual"):
        out[key] = None
    curve = None
    if n >= 2:
        if apex_choice is None and np.any(tr.kappa):
            out["apex_choice"] = apex_choice = "C1" if unit_area_D(tr) >= 0.0 else "C2"
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TangentKink)
                curve = assemble_closed_curve(tr, n, apex_choice or "C1", gap_tol=math.inf)
        except (NotConstructible, AntipodalEndpoints) as exc:
            out["constructible"] = False
            out["reason"] = str(exc)
    if curve is not None:
        rep = curve.report()
        out.update({k: rep[k] for k in ("junction_gap", "tangent_kink", "symmetry_residual",
                                        "area_residual", "halving_residual")})
        out["enclosed_area"] = rep["enclosed_area"] / K ** 2
        out["enclosed_area_target"] = 2.0 * math.pi / K ** 2
        out["great_circle"] = curve.great_circle
    gates = {"constructible": out["constructible"]}
    for key, tol in VERIFY_GATES.items():
        gates[key] = out[key] is not None and out[key] < tol
    out["gates"] = gates
    out["passed"] = all(gates.values())
    return out


# ---- export -----------------------------------------------------------

_STL_DTYPE = np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])


def export_mesh(mesh: TrajectoidMesh, path, fmt: str = "stl") -> None:
    """Write ``mesh`` as binary STL or ASCII OBJ with outward normals."""
    fmt = fmt.lower()
    if fmt == "stl":
        rec = np.zeros(len(mesh.triangles), dtype=_STL_DTYPE)
        rec["normal"] = mesh.triangle_normals()
        rec["v"] = mesh.vertices[mesh.triangles]
        header = b"trajectoid mesh".ljust(80, b"\0")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(struct.pack("<I", len(rec)))
            fh.write(rec.tobytes())
    elif fmt == "obj":
        with open(path, "w") as fh:
            fh.write("# trajectoid mesh\n")
            for key, val in sorted(mesh.provenance.items()):
                fh.write(f"# {key} {val}\n")
            for v in mesh.vertices:
                fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            for t in mesh.triangles + 1:
                fh.write(f"f {t[0]} {t[1]} {t[2]}\n")
    else:
        raise ValueError(f"unknown mesh format {fmt!r}; use 'stl' or 'obj'")


def read_stl(path):
    """Return (normals, triangle vertices) from a binary STL file."""
    with open(path, "rb") as fh:
        data = fh.read()
    (count,) = struct.unpack_from("<I", data, 80)
    if len(data) != 84 + count * _STL_DTYPE.itemsize:
        raise ValueError(f"STL size {len(data)} does not match {count} triangles")
    rec = np.frombuffer(data, dtype=_STL_DTYPE, count=count, offset=84)
    return rec["normal"].astype(float), rec["v"].astype(float)


def read_obj(path):
    """Return (vertices, triangles) with 0-based indices from an OBJ file."""
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(c) for c in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(c.split("/")[0]) for c in parts[1:]]
                if min(idx) < 1:
                    raise ValueError(f"line {lineno}: OBJ indices must be 1-based and positive")
                faces.append([i - 1 for i in idx])
    return np.array(verts), np.array(faces, dtype=np.int64)


def weld(triangle_vertices, tol: float = 0.0):
    """Index a triangle soup: returns (vertices, triangles)."""
    flat = np.asarray(triangle_vertices, float).reshape(-1, 3)
    if tol > 0.0:
        flat = np.round(flat / tol) * tol
    verts, inv = np.unique(flat, axis=0, return_inverse=True)
    return verts, inv.reshape(-1, 3)


def edge_manifold(triangles) -> bool:
    """Every undirected edge is shared by exactly two triangles."""
    t = np.asarray(triangles)
    e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return bool(np.all(counts == 2))
