import math
import time

import numpy as np
import pytest

from conftest import bounds_for, corpus_path, solved
from trajectoid import solver
from trajectoid.corpus import sine_path, straight_path
from trajectoid.errors import BracketFailure, NonSmoothPath, XOutOfRange
from trajectoid.path_model import path_from_curvature
from trajectoid.solver import (
    SolverBounds,
    compute_bounds,
    find_Kx,
    find_Qx,
    g_values,
    min_period,
    scan_dtk,
    solve,
)


def synthetic_bounds(X):
    return SolverBounds(K1=1.0, K2=1.0, K0=1.0, X=X, grid=np.zeros(0), g=np.zeros(0))


def test_straight_bounds():
    b = compute_bounds(straight_path())
    assert b.K1 == pytest.approx(math.pi)
    assert b.K2 == b.K1
    assert b.X == pytest.approx(math.pi, abs=1e-12)
    assert min_period(b) == 2


def test_straight_kx_is_x_over_l():
    path = straight_path(L=2.0)
    b = compute_bounds(path)
    for n in (3, 5, 8):
        x = 2 * math.pi / n
        assert find_Kx(path, x, b) == pytest.approx(x / 2.0, rel=1e-11)


@pytest.mark.parametrize("name", ["sine", "random-7"])
@pytest.mark.parametrize("n", [3, 4, 7])
def test_kx_solves_g_equals_x(name, n):
    path, b = corpus_path(name), bounds_for(name)
    x = 2 * math.pi / n
    K_x = find_Kx(path, x, b)
    assert 0 < K_x <= b.K0
    g = g_values(path, [K_x], b.steps)[0]
    assert g <= x
    assert abs(g - x) < 1e-11


def test_f_negative_near_zero():
    path, b = corpus_path("sine"), bounds_for("sine")
    x = 2 * math.pi / 3
    K_x = find_Kx(path, x, b)
    for apex in ("C1", "C2"):
        assert solver._f_values(path, [1e-6 * K_x], x, apex, b.steps)[0] < 0


def test_symmetric_sine_root_is_kx():
    path = sine_path(phase=0.0)
    res = solve(path, 3)
    assert res.Q_x == res.K_x
    assert res.area_residual < 1e-8
    assert res.rotation_residual < 1e-6


def test_min_period():
    assert min_period(synthetic_bounds(2 * math.pi / 3)) == 3
    assert min_period(synthetic_bounds(2 * math.pi / 3 * (1 - 1e-9))) == 4
    assert min_period(synthetic_bounds(math.pi)) == 2
    assert min_period(synthetic_bounds(7.0)) == 1


def test_scan_straight():
    Ks = np.linspace(0.1, 3.0, 7)
    rows = scan_dtk(straight_path(), Ks)
    np.testing.assert_array_equal(rows[:, 0], Ks)
    np.testing.assert_allclose(rows[:, 1], Ks, atol=1e-12)


def test_scan_semicircle():
    r = 0.25
    L = math.pi * r
    s = np.linspace(0, L, 33)
    path = path_from_curvature(np.column_stack([s, np.full_like(s, 1 / r)]), L, allow_open=True)
    Ks = np.array([0.5, 1.5, 3.0])
    rows = scan_dtk(path, Ks)
    rho = np.arctan2(Ks, 1 / r)
    phi = Ks * L / np.sin(rho)
    exact = np.arccos(np.cos(rho) ** 2 + np.sin(rho) ** 2 * np.cos(phi))
    np.testing.assert_allclose(rows[:, 1], exact, atol=1e-11)


def test_solve_is_deterministic():
    path = sine_path(samples=501)
    a = solve(path, 4).report()
    b = solve(path, 4).report()
    assert a == b


def test_corpus_solution_residuals():
    res = solved("sine", 3)
    assert 0 < res.Q_x < res.K_x
    assert res.area_residual < 1e-8
    assert res.rotation_residual < 1e-6
    assert res.passed
    rep = res.report()
    for key in ("K1", "K2", "K0", "X", "N", "K_x", "Q_x", "apex_choice", "S_D", "S_R"):
        assert key in rep


def test_break_refinement_on_synthetic_g(monkeypatch):
    monkeypatch.setattr(solver, "g_values",
                        lambda path, Ks, steps=None: np.sin(np.asarray(Ks, float)))
    b = compute_bounds(straight_path())
    assert b.K2 == pytest.approx(math.pi / 2, abs=1e-8)
    assert b.K0 == b.K2
    assert b.X == pytest.approx(1.0, abs=1e-14)
    assert np.all(b.grid <= b.K2)
    assert min_period(b) == 7


def test_decreasing_g_is_non_smooth(monkeypatch):
    monkeypatch.setattr(solver, "g_values",
                        lambda path, Ks, steps=None: -np.asarray(Ks, float))
    with pytest.raises(NonSmoothPath):
        compute_bounds(straight_path())


def test_largest_root_is_selected(monkeypatch):
    path, b = corpus_path("sine"), bounds_for("sine")
    x = 2 * math.pi / 3
    K_x = find_Kx(path, x, b)
    monkeypatch.setattr(solver, "unit_area_D", lambda tr: 0.1)

    def fake_f(path, Ks, x, apex, steps):
        k = np.asarray(Ks) / K_x
        return (k - 0.8) * (k - 0.5)

    monkeypatch.setattr(solver, "_f_values", fake_f)
    Q, apex, diag = find_Qx(path, x, b, K_x)
    assert apex == "C1"
    assert Q == pytest.approx(0.8 * K_x, rel=1e-12)
    lo, hi = diag["bracket"]
    assert lo <= Q <= hi


def test_no_sign_change_is_bracket_failure(monkeypatch):
    path, b = corpus_path("sine"), bounds_for("sine")
    monkeypatch.setattr(solver, "unit_area_D", lambda tr: 0.1)
    monkeypatch.setattr(solver, "_f_values", lambda path, Ks, x, apex, steps: np.ones(len(Ks)))
    with pytest.raises(BracketFailure):
        find_Qx(path, 2 * math.pi / 3, b)


def test_period_one_is_bracket_failure():
    with pytest.raises(BracketFailure) as exc:
        solve(corpus_path("sine"), 1, bounds_for("sine"))
    assert exc.value.note


def test_x_out_of_range_carries_n():
    b = bounds_for("sine")
    with pytest.raises(XOutOfRange) as exc:
        solve(corpus_path("sine"), 2, b)
    assert exc.value.N == min_period(b) == 3


def test_scan_resolution_converges():
    path = corpus_path("sine")
    t0 = time.perf_counter()
    coarse = compute_bounds(path, scan_resolution=1000)
    fine = compute_bounds(path, scan_resolution=10_000)
    elapsed = time.perf_counter() - t0
    assert abs(coarse.X - fine.X) < 1e-9
    assert abs(coarse.K2 - fine.K2) < 1e-9 * fine.K2
    assert elapsed < 120.0
