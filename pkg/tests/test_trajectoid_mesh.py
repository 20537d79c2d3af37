import functools
import itertools
import math
import warnings

import numpy as np
import pytest

from conftest import corpus_path, solved
from trajectoid.corpus import straight_path
from trajectoid.errors import DegenerateHull, TangentKink
from trajectoid.sphere_trace import trace
from trajectoid.trajectoid_mesh import (
    assemble_closed_curve,
    build_mesh,
    edge_manifold,
    export_mesh,
    mesh_from_normals,
    read_obj,
    read_stl,
    verify_period,
    weld,
)

CUBE = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)


def icosahedron():
    g = (1 + math.sqrt(5)) / 2
    v = []
    for a, b in itertools.product((-1, 1), repeat=2):
        v += [(0, a, b * g), (a, b * g, 0), (a * g, 0, b)]
    return np.array(v, float)


@functools.lru_cache(maxsize=None)
def sine_curve(n=3):
    res = solved("sine", n)
    return assemble_closed_curve(res.trace, n, res.apex_choice)


@functools.lru_cache(maxsize=None)
def sine_mesh(samples=2048):
    return build_mesh(sine_curve(), samples_per_copy=samples)


def test_cube_from_axis_normals():
    mesh = mesh_from_normals(CUBE, 1.0)
    assert len(mesh.vertices) == 8
    assert len(mesh.triangles) == 12
    assert len(mesh.normals) == 6
    np.testing.assert_allclose(np.abs(mesh.vertices), 1.0, atol=1e-14)
    assert mesh.volume() == pytest.approx(8.0, abs=1e-12)
    rep = mesh.check()
    assert rep.passed, rep.failures()


def test_icosahedron_normals_give_dodecahedron():
    r = 0.7
    mesh = mesh_from_normals(icosahedron(), r)
    assert len(mesh.vertices) == 20
    assert len(mesh.normals) == 12
    assert len(mesh.triangles) == 36
    assert mesh.euler_characteristic() == 2
    assert mesh.is_watertight()
    rep = mesh.check()
    assert rep.inscribed_radius_error < 1e-9
    assert np.max(np.abs(mesh.offsets - r)) < 1e-9 * r
    # dodecahedron with inradius r: edge a from r = a/2 sqrt((25 + 11 sqrt5)/10)
    a = 2 * r / math.sqrt((25 + 11 * math.sqrt(5)) / 10)
    assert mesh.volume() == pytest.approx((15 + 7 * math.sqrt(5)) / 4 * a ** 3, rel=1e-12)
    circum = a * math.sqrt(3) * (1 + math.sqrt(5)) / 4
    np.testing.assert_allclose(np.linalg.norm(mesh.vertices, axis=1), circum, rtol=1e-12)


def test_hemisphere_normals_are_unbounded():
    rng = np.random.default_rng(1)
    q = rng.normal(size=(50, 3))
    q[:, 2] = np.abs(q[:, 2]) + 0.1
    with pytest.raises(DegenerateHull, match="unbounded"):
        mesh_from_normals(q, 1.0)
    with pytest.raises(DegenerateHull, match="unbounded"):
        mesh_from_normals(CUBE[:3], 1.0)


def test_great_circle_is_unbounded():
    tr = trace(straight_path(samples=129), math.pi / 2)
    curve = assemble_closed_curve(tr, 4)
    assert curve.great_circle
    assert curve.area_residual() < 1e-12
    with pytest.raises(DegenerateHull, match="unbounded"):
        build_mesh(curve)


def test_cube_stl_round_trip(tmp_path):
    mesh = mesh_from_normals(CUBE, 1.0)
    f = tmp_path / "cube.stl"
    export_mesh(mesh, f, "stl")
    assert f.stat().st_size == 84 + 50 * 12
    normals, tri_verts = read_stl(f)
    verts, tris = weld(tri_verts)
    assert len(verts) == 8
    assert edge_manifold(tris)
    v = verts[tris]
    calc = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    calc /= np.linalg.norm(calc, axis=1, keepdims=True)
    np.testing.assert_allclose(calc, normals, atol=1e-6)
    # outward: each normal points away from the origin
    assert np.all(np.einsum("ij,ij->i", normals, v.mean(axis=1)) > 0)
    vol = np.sum(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2]))) / 6
    assert vol == pytest.approx(8.0, abs=1e-6)


def test_cube_obj_round_trip(tmp_path):
    mesh = mesh_from_normals(CUBE, 1.0, provenance={"source": "cube"})
    f = tmp_path / "cube.obj"
    export_mesh(mesh, f, "obj")
    text = f.read_text()
    assert "# source cube" in text
    verts, tris = read_obj(f)
    np.testing.assert_array_equal(verts, mesh.vertices)
    np.testing.assert_array_equal(tris, mesh.triangles)
    assert edge_manifold(tris)


def test_obj_rejects_zero_index(tmp_path):
    f = tmp_path / "bad.obj"
    f.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")
    with pytest.raises(ValueError, match="line 4"):
        read_obj(f)


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        export_mesh(mesh_from_normals(CUBE, 1.0), tmp_path / "x", "ply")


def test_sine_curve_closes():
    curve = sine_curve()
    assert curve.junction_gap < 1e-8
    assert curve.tangent_kink < 1e-5
    assert curve.symmetry_residual() < 1e-8
    assert curve.closure_gap() < 1e-2
    assert curve.area_residual() < 1e-6
    assert curve.halving_residual() < 1e-6


def test_sine_mesh_invariants():
    mesh = sine_mesh()
    rep = mesh.check()
    assert rep.watertight
    assert rep.euler_characteristic == 2
    assert rep.passed, rep.failures()
    r = mesh.inscribed_radius
    assert r == pytest.approx(1 / solved("sine", 3).Q_x)
    # every triangle normal points outward
    v = mesh.vertices[mesh.triangles]
    assert np.all(np.einsum("ij,ij->i", mesh.triangle_normals(), v.mean(axis=1)) > 0)
    # the inscribed sphere touches along the contact curve
    d = np.linalg.norm(mesh.contact_points, axis=1)
    np.testing.assert_allclose(d, r, rtol=1e-12)


def test_sine_mesh_volume_converges():
    v1 = sine_mesh(2048).volume()
    v2 = sine_mesh(4096).volume()
    assert abs(v1 - v2) / v2 < 1e-4


def test_verify_at_root_passes():
    res = solved("sine", 3)
    out = verify_period(corpus_path("sine"), res.Q_x, 3)
    assert out["passed"], out["gates"]
    assert out["enclosed_area"] == pytest.approx(out["enclosed_area_target"], rel=1e-6)


def test_perturbed_radius_fails_gates():
    res = solved("sine", 3)
    out = verify_period(corpus_path("sine"), 1.01 * res.Q_x, 3)
    assert not out["passed"]
    for key in ("tangent_kink", "area_residual", "halving_residual", "rotation_residual"):
        assert not out["gates"][key], key


def test_unconstructible_k_is_reported():
    res = solved("sine", 3)
    out = verify_period(corpus_path("sine"), 1.2 * res.bounds.K0, 8)
    assert out["constructible"] is False
    assert out["passed"] is False


def test_tangent_kink_warns():
    res = solved("sine", 3)
    tr = trace(corpus_path("sine"), 1.01 * res.Q_x)
    with pytest.warns(TangentKink):
        assemble_closed_curve(tr, 3, res.apex_choice)
    with warnings.catch_warnings():
        warnings.simplefilter("error", TangentKink)
        assemble_closed_curve(res.trace, 3, res.apex_choice)
