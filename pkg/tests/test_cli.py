import csv
import functools
import io
import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from trajectoid.cli import main
from trajectoid.path_model import load_path
from trajectoid.solver import solve

DATA = Path(__file__).resolve().parent.parent / "data"
SINE = str(DATA / "sine.json")
STRAIGHT = str(DATA / "straight.json")
SVG = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@functools.lru_cache(maxsize=None)
def sine_q3():
    return solve(load_path(SINE), 3).Q_x


def test_solve_ok(capsys):
    code, out, _ = run(capsys, "solve", "--path", SINE, "--n", 3)
    assert code == 0
    rep = json.loads(out)
    assert rep["schema_version"] == 1
    assert rep["n"] == 3 and rep["N"] == 3
    assert 0 < rep["Q_x"] < rep["K_x"] <= rep["K0"]
    assert rep["passed"] is True
    assert rep["config"]["path_file"] == SINE


def test_solve_deterministic(capsys):
    a = run(capsys, "solve", "--path", SINE, "--n", 4)
    b = run(capsys, "solve", "--path", SINE, "--n", 4)
    assert a == b


def test_x_out_of_range_exit_2(capsys):
    code, _, err = run(capsys, "solve", "--path", SINE, "--n", 2)
    assert code == 2
    assert "n ≥ 3" in err


def test_period_one_exit_3(capsys):
    code, _, err = run(capsys, "solve", "--path", SINE, "--n", 1)
    assert code == 3
    assert "note:" in err


@pytest.mark.parametrize("argv", [
    ["solve", "--path", SINE],
    ["solve", "--path", SINE, "--n", "3", "--bogus"],
    ["frobnicate"],
    ["solve", "--n", "3"],
    ["mesh", "--path", SINE, "--n", "3", "--K", "2.0"],
    ["trace", "--path", SINE, "--K", "-1"],
])
def test_usage_errors_exit_64(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 64
    assert "usage error" in err


def test_malformed_json_exit_65(capsys, tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"type": "curvature",\n "L": 1.0,\n "samples": [[0, 0]\n')
    code, _, err = run(capsys, "solve", "--path", f, "--n", 3)
    assert code == 65
    assert "line" in err
    code, _, _ = run(capsys, "solve", "--path", tmp_path / "missing.json", "--n", 3)
    assert code == 65


def test_trace_csv_and_svg(capsys, tmp_path):
    out = tmp_path / "t.csv"
    code, _, _ = run(capsys, "trace", "--path", SINE, "--K", 2.0, "--out", out)
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh, strict=True))
    assert rows[0] == ["s", "px", "py", "pz", "tx", "ty", "tz"]
    assert all(len(r) == 7 for r in rows)
    vals = [[float(v) for v in r] for r in rows[1:]]
    assert vals[0][:4] == [0.0, 0.0, 0.0, 1.0]
    root = ET.parse(out.with_suffix(".svg")).getroot()
    groups = {g.get("id"): g for g in root.iter(SVG + "g")}
    assert set(groups) == {"plan", "projection"}
    for g in groups.values():
        lines = g.findall(SVG + "polyline")
        assert len(lines) == 1
        pts = lines[0].get("points").split()
        assert len(pts) > 100


def test_trace_to_stdout(capsys):
    code, out, _ = run(capsys, "trace", "--path", STRAIGHT, "--K", 1.0)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out), strict=True))
    assert float(rows[-1][0]) == 1.0


def test_env_defaults_and_precedence(capsys, monkeypatch):
    ref = run(capsys, "solve", "--path", SINE, "--n", 3)
    monkeypatch.setenv("TRAJ_PATH", SINE)
    monkeypatch.setenv("TRAJ_N", "3")
    assert run(capsys, "solve") == ref
    monkeypatch.setenv("TRAJ_N", "4")
    assert run(capsys, "solve", "--n", 3) == ref


def test_bad_env_value_is_usage_error(capsys, monkeypatch):
    monkeypatch.setenv("TRAJ_N", "three")
    code, _, _ = run(capsys, "solve", "--path", SINE)
    assert code == 64


def test_mesh_ok(capsys, tmp_path):
    out, report = tmp_path / "m.stl", tmp_path / "r.json"
    code, stdout, _ = run(capsys, "mesh", "--path", SINE, "--n", 3, "--out", out,
                          "--report", report)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["failures"] == []
    assert json.loads(report.read_text()) == summary
    assert out.stat().st_size == 84 + 50 * summary["triangles"]


def test_mesh_forced_k_names_invariant(capsys):
    K = 1.05 * sine_q3()
    code, stdout, err = run(capsys, "mesh", "--path", SINE, "--n", 3, "--K", K, "--force")
    assert code == 4
    assert "tangent_kink" in err
    assert "tangent_kink" in json.loads(stdout)["failures"]


def test_mesh_straight_is_unbounded(capsys):
    code, stdout, err = run(capsys, "mesh", "--path", STRAIGHT, "--n", 4)
    assert code == 4
    assert "unbounded body" in err
    assert "bounded" in json.loads(stdout)["failures"]


def test_verify_off_root(capsys):
    K = 1.05 * sine_q3()
    code, out, _ = run(capsys, "verify", "--path", SINE, "--n", 3, "--K", K)
    assert code == 0
    rep = json.loads(out)
    assert rep["passed"] is False
    assert rep["gates"]["area_residual"] is False
    code, out, _ = run(capsys, "verify", "--path", SINE, "--n", 3, "--K", sine_q3())
    assert json.loads(out)["passed"] is True


def test_scan(capsys):
    code, out, _ = run(capsys, "scan", "--path", STRAIGHT, "--samples", 5, "--K-min", 0.5,
                       "--K-max", 2.0)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out), strict=True))
    assert rows[0] == ["K", "g"]
    for K, g in rows[1:]:
        assert float(g) == pytest.approx(float(K), abs=1e-12)


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest", "--seed", 3)
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "trajectoid", "--help"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "Exit codes" in proc.stdout
