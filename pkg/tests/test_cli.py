"""Command-line interface tests: schema, determinism, exit codes,
config overrides, and artifact files."""

import json
import subprocess
import sys

import pytest

from boundaryflow.kernels import BoundaryKind, Wall, star_kernel

CLI = [sys.executable, "-m", "boundaryflow.cli"]


def run_cli(args, env=None):
    return subprocess.run(CLI + list(args), capture_output=True,
                          text=True, env=env)


def test_kernel_value_matches_library():
    r = run_cli(["kernel", "--bc", "robin", "--c", "2.0", "--tau", "0.7",
                 "--z", "1.2", "--zp", "0.3"])
    assert r.returncode == 0
    payload = json.loads(r.stdout)
    assert payload["schema"] == "boundaryflow/1"
    expect = float(star_kernel(BoundaryKind(Wall.ROBIN, 2.0), 0.7, 1.2, 0.3))
    assert payload["value"] == pytest.approx(expect, rel=1e-14)


def test_prop_reports_flowing_and_closed():
    r = run_cli(["prop", "--bc", "neumann", "--z", "0.4", "--zp", "0.9",
                 "--p", "0.3"])
    assert r.returncode == 0
    payload = json.loads(r.stdout)
    assert payload["value"] == pytest.approx(
        payload["closed_form_full_range"], rel=1e-3)


def test_forest_counts():
    r = run_cli(["forest", "--s", "2", "--l", "1"])
    assert r.returncode == 0
    payload, end = json.JSONDecoder().raw_decode(r.stdout)
    assert payload["count"] == 11
    csv_lines = r.stdout[end:].strip().splitlines()
    assert csv_lines[0] == "index,n_trees,v2"
    assert len(csv_lines) == 12


def test_lemma_sweep_deterministic():
    args = ["lemma", "--lemma", "reduction", "--samples", "10"]
    r1, r2 = run_cli(args), run_cli(args)
    assert r1.returncode == 0
    assert r1.stdout == r2.stdout


def test_usage_error_exit_code():
    assert run_cli(["forest", "--s", "2"]).returncode == 2
    assert run_cli(["nonsense"]).returncode == 2


def test_validation_error_exit_code():
    r = run_cli(["kernel", "--tau", "-1.0", "--z", "0.1", "--zp", "0.2"])
    assert r.returncode == 1
    err = json.loads(r.stderr)
    assert "error" in err


def test_config_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"tau": 0.7, "z": 1.2, "zp": 0.3}))
    direct = run_cli(["kernel", "--tau", "0.7", "--z", "1.2",
                      "--zp", "0.3"])
    via_cfg = run_cli(["kernel", "--tau", "1.0", "--z", "0.0",
                       "--zp", "0.0", "--config", str(cfg)])
    assert via_cfg.returncode == 0
    assert json.loads(via_cfg.stdout)["value"] == \
        json.loads(direct.stdout)["value"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_option": 1}))
    assert run_cli(["kernel", "--tau", "1.0", "--z", "0.0", "--zp", "0.0",
                    "--config", str(bad)]).returncode == 2


def test_output_dir_artifacts(tmp_path):
    out = tmp_path / "artifacts"
    r = run_cli(["flow", "tadpole", "--bc", "neumann",
                 "--lambda0", "10.0", "--output-dir", str(out)])
    assert r.returncode == 0
    files = {p.name for p in out.iterdir()}
    assert any(n.endswith(".json") for n in files)
    assert any(n.endswith(".csv") for n in files)
    csv_path = next(p for p in out.iterdir() if p.suffix == ".csv")
    lines = csv_path.read_text().strip().splitlines()
    header = lines[0].split(",")
    last = dict(zip(header, lines[-1].split(",")))
    # the series ends at scale zero where the renormalization condition
    # pins every surface coefficient to zero
    assert float(last["lam"]) == 0.0
    assert float(last["s"]) == 0.0


def test_robin_limit_exit_reflects_monotonicity():
    r = run_cli(["flow", "robin-limit", "--lambda0", "10.0",
                 "--c-list", "5", "10", "20"])
    assert r.returncode == 0
    # stdout carries the JSON report followed by the CSV gap table
    payload, _ = json.JSONDecoder().raw_decode(r.stdout)
    assert payload["gaps_decreasing"]
