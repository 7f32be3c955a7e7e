import csv
import json

import numpy as np
import pytest

from dgrkit.cli import main


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def sys_a(tmp_path):
    return write_json(tmp_path / "sys_a.json", {"A": [[0.9, 10], [0, 0]], "B": [[1], [1]]})


@pytest.fixture
def diag20(tmp_path):
    return write_json(tmp_path / "diag.json", {"A": [[2, 0], [0, 0]], "B": [[1], [0]]})


CHAIN4 = {
    "A": [[1.2, 1, 0, 0], [0, 0.5, 1, 0], [0, 0, 0.3, 1], [0, 0, 0, 0.2]],
    "B": [[1, 0], [0, 1], [0, 0], [0, 0]],
}


def test_analyze_sys_a(sys_a, tmp_path, capsys):
    assert main(["analyze", sys_a, "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "analysis.json").read_text())
    assert rep["rho_Atilde"] == pytest.approx(4.55, abs=1e-6)
    assert rep["regularizable"] is False
    assert set(rep) == {
        "rho_A", "rho_Atilde", "regularizable", "contractible",
        "stabilizable", "detectable_transpose", "certificate_present",
    }


def test_analyze_identity_to_stdout(tmp_path, capsys):
    path = write_json(tmp_path / "id.json", {"A": [[1.5, 0], [0, 2]], "B": [[1, 0], [0, 1]]})
    assert main(["analyze", path]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["regularizable"] is True and rep["rho_Atilde"] == 0.0


@pytest.mark.parametrize(
    "text",
    [
        '{"A": [[1, 2], [3',
        '{"A": [[1, 2], [3]], "B": [[1], [1]]}',
        '{"A": [[1, 2]], "B": [[1]]}',
        '{"A": [[1]], "B": [[1], [2]]}',
        '{"B": [[1]]}',
        '[1, 2]',
    ],
)
def test_malformed_system_exit_2(tmp_path, capsys, text):
    p = tmp_path / "bad.json"
    p.write_text(text)
    assert main(["analyze", str(p)]) == 2
    assert "bad.json" in capsys.readouterr().err


def test_parse_error_has_line_and_column(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "A": [[1, 2],\n  oops\n}')
    assert main(["analyze", str(p)]) == 2
    assert "bad.json:3:3" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path):
    assert main(["analyze", str(tmp_path / "nope.json")]) == 2


def test_simulate_rows_and_determinism(tmp_path):
    cfg = write_json(tmp_path / "cfg.json", {"system": CHAIN4, "controller": "dgr", "steps": 30, "seed": 4})
    assert main(["simulate", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["simulate", cfg, "--out", str(tmp_path / "b")]) == 0
    for name in ("trajectory.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    with open(tmp_path / "a" / "trajectory.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 32
    assert rows[0] == ["t", "x_1", "x_2", "x_3", "x_4", "u_1", "u_2",
                       "norm_x", "norm_z", "rank_X", "bound", "phase"]


def test_simulate_round_trip_is_lossless(tmp_path):
    from dgrkit.harness import ScenarioConfig, run_scenario
    from dgrkit.sysmodel import LtiSystem

    cfg = write_json(tmp_path / "cfg.json", {"system": CHAIN4, "controller": "fdgr", "steps": 12, "seed": 1})
    assert main(["simulate", cfg, "--out", str(tmp_path)]) == 0
    log_, summary = run_scenario(
        ScenarioConfig(LtiSystem(np.array(CHAIN4["A"]), np.array(CHAIN4["B"])), controller="fdgr", steps=12, seed=1)
    )
    with open(tmp_path / "trajectory.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    X = np.array([[float(r[f"x_{i}"]) for i in range(1, 5)] for r in rows])
    assert np.array_equal(X, log_.x)
    assert np.array_equal(np.array([float(r["bound"]) for r in rows]), log_.bound)
    loaded = json.loads((tmp_path / "summary.json").read_text())
    assert loaded["peak_norm"] == summary["peak_norm"]


def test_simulate_dgr_then_lqr_identifies(tmp_path):
    cfg = write_json(
        tmp_path / "cfg.json",
        {"system": CHAIN4, "controller": "dgr_then_lqr", "steps": 30, "seed": 2},
    )
    assert main(["simulate", cfg, "--out", str(tmp_path)]) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["identification_error"] <= 1e-6
    assert s["closed_loop_rho"] < 1


def test_simulate_system_file_and_overrides(tmp_path):
    write_json(tmp_path / "sys.json", CHAIN4)
    cfg = write_json(tmp_path / "cfg.json", {"system_file": "sys.json", "steps": 5})
    assert main(["simulate", cfg, "--out", str(tmp_path), "--seed", "9", "--alpha", "0.5"]) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["seed"] == 9 and s["alpha"] == 0.5


@pytest.mark.parametrize(
    "obj",
    [
        {"system": CHAIN4, "controller": "pid"},
        {"system": CHAIN4, "steps": 0},
        {"system": CHAIN4, "colour": "red"},
        {"steps": 3},
    ],
)
def test_simulate_bad_config_exit_2(tmp_path, obj):
    cfg = write_json(tmp_path / "cfg.json", obj)
    assert main(["simulate", cfg, "--out", str(tmp_path)]) == 2


def test_bounds_diag(diag20, capsys):
    assert main(["bounds", diag20, "--t", "2"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert float(rows[1]["M_lower"]) == 4.0 and float(rows[1]["M_upper"]) == 4.0
    assert rows[1]["L"] == ""


def test_bounds_order_too_large(diag20, capsys):
    assert main(["bounds", diag20, "--t", "3"]) == 3
    assert "order" in capsys.readouterr().err


def test_bounds_with_trajectory(tmp_path, capsys):
    write_json(tmp_path / "sys.json", CHAIN4)
    cfg = write_json(tmp_path / "cfg.json", {"system_file": "sys.json", "steps": 20, "seed": 4})
    assert main(["simulate", cfg, "--out", str(tmp_path)]) == 0
    assert main(["bounds", str(tmp_path / "sys.json"), "--trajectory", str(tmp_path / "trajectory.csv")]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert len(rows) == 20
    L = np.array([float(r["L"]) for r in rows])
    with open(tmp_path / "trajectory.csv", newline="") as fh:
        traj = list(csv.DictReader(fh))
    x0 = float(traj[0]["norm_x"])
    logged = np.array([float(r["bound"]) for r in traj[1:]])
    assert np.allclose(L * x0, logged, rtol=1e-12)
    assert rows[-1]["M_lower"] == ""


def test_instability_examples(tmp_path, diag20, capsys):
    ident = write_json(tmp_path / "i.json", {"A": np.eye(3).tolist(), "B": [[1], [0], [0]]})
    assert main(["instability", ident, "--t", "3"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["estimate"] == pytest.approx(1.0)
    assert main(["instability", diag20, "--t", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["estimate"] == pytest.approx(2.0, abs=1e-6)
    assert rep["lower"] <= rep["estimate"] ** 2 <= rep["upper"]
    assert np.array(rep["frame"]).shape == (2, 2)


def test_instability_restarts_monotone(tmp_path, capsys):
    A = np.random.default_rng(3).normal(size=(5, 5))
    path = write_json(tmp_path / "r.json", {"A": A.tolist(), "B": np.eye(5).tolist()})
    vals = []
    for r in ("1", "64"):
        assert main(["instability", path, "--t", "3", "--restarts", r, "--seed", "2"]) == 0
        vals.append(json.loads(capsys.readouterr().out)["estimate"])
    assert vals[1] >= vals[0]


def test_usage_error_exit_2(capsys):
    assert main(["frobnicate"]) == 2
    assert main([]) == 2
