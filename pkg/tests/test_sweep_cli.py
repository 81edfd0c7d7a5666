import json
import subprocess
import sys

import pytest

from sirperc.bounds import Q_STAR, peierls_series
from sirperc.sweep import SweepSpec, emit, parse_csv, run_sweep


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(experiment="nope", axes={"x": [1.0]})
    with pytest.raises(ValueError):
        SweepSpec(experiment="bounds", axes={})
    with pytest.raises(ValueError):
        SweepSpec(experiment="bounds", axes={"q": [0.1]}, trials=0)


def test_bounds_sweep_over_q():
    spec = SweepSpec(experiment="bounds", axes={"q": [0.25, 0.1, Q_STAR]})
    res = run_sweep(spec)
    got = {round(r.point["q"], 7): r.extra["series_value"] for r in res.rows}
    assert got[0.1] == pytest.approx(0.4 / (3 * 0.49))
    assert got[round(Q_STAR, 7)] == pytest.approx(1.0, abs=1e-9)
    assert got[0.25] == pytest.approx(16.0 / 3.0)
    # rows in ascending axis order
    assert [r.point["q"] for r in res.rows] == sorted([0.1, Q_STAR, 0.25])


def test_emit_deterministic_and_round_trip():
    spec = SweepSpec(experiment="bounds", axes={"q": [0.05, 0.1]})
    res = run_sweep(spec)
    b = emit(res, "csv")
    assert b == emit(res, "csv")
    rows = parse_csv(b)
    assert len(rows) == 2
    assert rows[0]["series_value"] == pytest.approx(peierls_series(0.05))
    j = emit(res, "json")
    payload = json.loads(j)
    assert payload["rows"][0]["point"]["q"] == 0.05


def test_worker_count_invariance():
    kwargs = dict(
        experiment="sir_graph", axes={"T": [0.5, 2.0, 8.0]},
        fixed={"n": 15, "attenuation.alpha": 4.0}, trials=4, base_seed=9,
    )
    outputs = {
        emit(run_sweep(SweepSpec(workers=wk, **kwargs)), "csv")
        for wk in (1, 2, 8)
    }
    assert len(outputs) == 1


def test_skipped_points_are_reported():
    # rho >= delta is invalid: the point is skipped, not fatal
    spec = SweepSpec(
        experiment="hex", axes={"lam": [1.0]},
        fixed={"delta": 1.0, "rho": 2.0, "window": 8.0}, trials=1,
    )
    res = run_sweep(spec)
    assert not res.rows
    assert len(res.skipped) == 1
    assert "rho" in res.skipped[0][1]
    text = emit(res, "csv").decode()
    assert "# skipped" in text


def _run_cli(*args, check=True):
    proc = subprocess.run(
        [sys.executable, "-m", "sirperc.cli", *args],
        capture_output=True, text=True,
    )
    if check:
        assert proc.returncode == 0, proc.stderr
    return proc


def test_cli_sample():
    proc = _run_cli("--seed", "3", "sample", "--n", "4")
    lines = proc.stdout.strip().split("\n")
    assert lines[0] == "x,y"
    assert len(lines) == 5
    x, y = map(float, lines[1].split(","))
    assert 0 <= x <= 1 and 0 <= y <= 1


def test_cli_build_graph():
    proc = _run_cli("--seed", "3", "build-graph", "--n", "6", "--threshold", "0.5",
                    "--alpha", "4")
    for line in proc.stdout.strip().split("\n"):
        if not line:
            continue
        i, j, v = line.split()
        assert float(v) >= 0.5 or float(v) == float("inf")


def test_cli_bounds_row():
    proc = _run_cli("bounds", "--intensity", "50", "--cap-m", "100",
                    "--threshold", "0.01", "--attenuation-kind", "bounded_power_law",
                    "--alpha", "4", "--r0", "0.5")
    header, row = proc.stdout.strip().split("\n")
    assert header.startswith("lambda,M,T,K")
    assert float(row.split(",")[0]) == 50.0


def test_cli_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# demo config\n"
        "process.n = 5\n"
        "attenuation.kind = power_law\n"
        "attenuation.alpha = 4.0\n"
        "sir.threshold = 1.0\n"
    )
    p1 = _run_cli("--config", str(cfg), "--seed", "2", "sample")
    assert len(p1.stdout.strip().split("\n")) == 6
    p2 = _run_cli("--config", str(cfg), "--seed", "2", "sample", "--n", "3")
    assert len(p2.stdout.strip().split("\n")) == 4


def test_cli_bad_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("this is not a key value line\n")
    proc = _run_cli("--config", str(cfg), "sample", "--n", "2", check=False)
    assert proc.returncode == 2


def test_cli_missing_required_exit_code():
    proc = _run_cli("square", "--intensity", "5", check=False)
    assert proc.returncode == 2


def test_cli_unwritable_output_exit_code(tmp_path):
    proc = _run_cli("sample", "--n", "2", "--out", "/nonexistent/dir/file.csv",
                    check=False)
    assert proc.returncode == 3


def test_cli_sweep_bytes_identical(tmp_path):
    spec = {
        "experiment": "bounds",
        "axes": {"q": [0.05, 0.1, 0.2]},
        "trials": 1,
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    _run_cli("--workers", "1", "sweep", str(path), "--out", str(out1))
    _run_cli("--workers", "2", "sweep", str(path), "--out", str(out2))
    b1 = out1.read_bytes()
    assert b1 == out2.read_bytes()
    assert b1.decode().count("\n") == 4


def test_cli_sweep_linspace_axis(tmp_path):
    spec = {
        "experiment": "bounds",
        "axes": {"q": {"min": 0.05, "max": 0.15, "steps": 3}},
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    proc = _run_cli("sweep", str(path))
    rows = parse_csv(proc.stdout.encode())
    assert [r["q"] for r in rows] == [0.05, 0.1, 0.15]
