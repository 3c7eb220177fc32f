import csv
import io
import json

import numpy as np
import pytest

from toda.cli import main
from toda.flow import FlowSpec, flow_finite
from toda.lattice import JacobiCoefficients, truncate


@pytest.fixture
def lattice_file(tmp_path):
    q = JacobiCoefficients.finite((0.2, -0.1, 0.4), (1.0, 0.7))
    path = tmp_path / "q.json"
    path.write_text(json.dumps(q.to_dict()))
    return path, q


def read_csv(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_flow_writes_csv_and_meta(tmp_path, lattice_file):
    path, q = lattice_file
    out = tmp_path / "run1"
    assert main(["flow", "--input", str(path), "--poly", "0,1", "--time", "0.25", "--out", str(out)]) == 0
    rows = read_csv(out / "result.csv")
    assert list(rows[0]) == ["n", "a", "b"]
    R = flow_finite(truncate(q, 1, 3), FlowSpec((0.0, 1.0), 0.25))
    np.testing.assert_array_equal([float(r["b"]) for r in rows], R.diag)
    np.testing.assert_array_equal([float(r["a"]) for r in rows[1:]], R.offdiag)
    meta = json.loads((out / "meta.json").read_text())
    assert meta["command"] == "flow" and meta["tool"] == "toda" and "wall_time_s" in meta


def test_flags_override_config(tmp_path, lattice_file):
    path, _ = lattice_file
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(path), "poly": "0,1", "time": 5.0}))
    assert main(["flow", "--config", str(cfg), "--time", "0.1", "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "meta.json").read_text())["config"]["time"] == 0.1


def test_missing_required_option(lattice_file, capsys):
    path, _ = lattice_file
    assert main(["flow", "--input", str(path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_input_file(tmp_path):
    assert main(["flow", "--input", str(tmp_path / "nope.json"), "--time", "1"]) == 2


def test_darboux_command(tmp_path):
    q = JacobiCoefficients.free(lo=0, hi=2)
    path = tmp_path / "free.json"
    path.write_text(json.dumps(q.to_dict()))
    assert main(["darboux", "--input", str(path), "--zeta", "3", "--out", str(tmp_path / "d")]) == 0
    rows = read_csv(tmp_path / "d" / "result.csv")
    assert all(abs(float(r["a"]) - 1) < 1e-12 and abs(float(r["b"])) < 1e-12 for r in rows)
    assert main(["darboux", "--input", str(path)]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    code = main(["ode", "--family", "exploding", "--c", "1", "--alpha", "1", "--beta", "1",
                 "--lo", "1", "--hi", "20", "--t-final", "0.5", "--out", str(tmp_path / "x")])
    assert code == 3
    assert "StepSizeUnderflow" in capsys.readouterr().err


def test_ode_trajectory_csv(tmp_path):
    assert main(["ode", "--family", "growing", "--gamma", "0.5", "--lo", "1", "--hi", "30",
                 "--t-final", "0.2", "--times", "0.1,0.2", "--out", str(tmp_path / "g")]) == 0
    rows = read_csv(tmp_path / "g" / "result.csv")
    assert list(rows[0]) == ["t", "n", "a", "b"] and len(rows) == 60


def test_ensemble_reproducible(tmp_path, monkeypatch):
    args = ["ensemble", "--L", "4", "--nu", "2", "--sigma", "1", "--mean-b", "0",
            "--samples", "300", "--t", "0.1", "--seed", "42"]
    assert main(args + ["--out", str(tmp_path / "e1")]) == 0
    monkeypatch.setenv("TODA_THREADS", "4")
    assert main(args + ["--out", str(tmp_path / "e2")]) == 0
    r1 = (tmp_path / "e1" / "result.json").read_bytes()
    assert r1 == (tmp_path / "e2" / "result.json").read_bytes()
    meta = json.loads((tmp_path / "e1" / "meta.json").read_text())
    assert meta["seed"] == 42 and meta["generator"] == "numpy.Philox"
    assert json.loads(r1)["n_samples"] == 300


def test_ensemble_requires_seed():
    assert main(["ensemble", "--samples", "10"]) == 2


def test_bad_thread_count(monkeypatch):
    monkeypatch.setenv("TODA_THREADS", "many")
    assert main(["ensemble", "--samples", "10", "--seed", "1"]) == 2


def test_series_check(capsys):
    moments = ",".join(str(float(np.prod(np.arange(1, 2 * k, 2)))) for k in range(10))
    assert main(["series-check", "--moments", moments, "--alpha", "1", "--c", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["passes_growth"] is True
    assert main(["series-check", "--moments", "1,1"]) == 2


def test_selftest_subset(capsys):
    assert main(["selftest", "--only", "A2,A7"]) == 0
    out = capsys.readouterr().out
    assert "A2 PASS" in out and "A7 PASS" in out
    assert main(["selftest", "--only", "A99"]) == 2
