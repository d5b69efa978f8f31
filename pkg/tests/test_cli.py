"""End-to-end command checks; heavier statistical paths run at small scale."""

import csv
import json
import subprocess
import sys

import pytest

from plateau import cli


def run_cli(*args, env_extra=None, timeout=180):
    import os

    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "plateau.cli", *args],
        capture_output=True,
        text=True,
        env=env,
        timeout=timeout,
    )


def test_version_flag():
    r = run_cli("--version")
    assert r.returncode == 0
    assert r.stdout.strip()


def test_identities_default_passes():
    r = run_cli("identities")
    assert r.returncode == 0, r.stdout + r.stderr
    assert "all checks passed" in r.stdout
    assert "tree SS exact" in r.stdout


def test_identities_failure_exits_one(monkeypatch, capsys):
    monkeypatch.setattr(cli, "diagram_exact", lambda *a, **k: 123.0)
    rc = cli.main(["identities", "--samples", "200"])
    out = capsys.readouterr().out
    assert rc == 1
    assert "FAIL" in out


def test_variance_csv_shape(tmp_path):
    out = tmp_path / "var.csv"
    r = run_cli(
        "variance", "--case", "onsite-both", "--n", "2:3",
        "--samples", "600", "--const-samples", "600", "--out", str(out),
    )
    assert r.returncode == 0, r.stderr
    raw = out.read_bytes()
    assert b"\r\n" in raw  # proper CSV line endings
    rows = list(csv.DictReader(raw.decode().splitlines()))
    assert [row["n"] for row in rows] == ["2", "3"]
    assert set(rows[0]) == {
        "n", "var_emp", "stderr", "var_analytic", "epsilon_mean", "samples", "seed"
    }
    # numbers round-trip at full precision
    v = rows[0]["var_emp"]
    assert format(float(v), ".17g") == v


def test_variance_json_structure():
    r = run_cli(
        "variance", "--case", "onsite-plus", "--n", "2", "--samples", "500",
        "--const-samples", "500", "--format", "json",
    )
    assert r.returncode == 0, r.stderr
    doc = json.loads(r.stdout)
    assert set(doc) == {"config", "points", "seed", "version", "wall_time_s"}
    assert doc["points"][0]["n"] == 2


def test_verify_flag_reproduces():
    r = run_cli(
        "variance", "--case", "onsite-both", "--n", "2", "--samples", "400",
        "--const-samples", "400", "--verify",
    )
    assert r.returncode == 0, r.stderr


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("samples=444\nconst-samples=400\ncase=onsite-both\nn=2\n")
    r = run_cli("variance", "--config", str(cfg))
    assert r.returncode == 0, r.stderr
    assert r.stdout.splitlines()[1].split(",")[5] == "444"
    r2 = run_cli("variance", "--config", str(cfg), "--samples", "500")
    assert r2.stdout.splitlines()[1].split(",")[5] == "500"


def test_env_seed_default():
    r = run_cli(
        "variance", "--case", "onsite-both", "--n", "2", "--samples", "400",
        "--const-samples", "400", env_extra={"PLATEAU_SEED": "77"},
    )
    assert r.returncode == 0
    assert r.stdout.splitlines()[1].rstrip().split(",")[6] == "77"


def test_haar_epsilon_csv():
    r = run_cli("haar-epsilon", "--cost", "xeb", "--n", "1:2", "--samples", "500")
    assert r.returncode == 0, r.stderr
    header = r.stdout.splitlines()[0].rstrip()
    assert header == "n,epsilon_mc,stderr,epsilon_closed,trace_oe_sq_mc,clamp_count"


def test_circuit_with_layout_file(tmp_path):
    layout = tmp_path / "ring.layout"
    layout.write_text("qubits 4\n0 1\n2 3\n1 2\n")
    r = run_cli("circuit", "--layout", "file", "--layout-file", str(layout), "--samples", "500")
    assert r.returncode == 0, r.stdout + r.stderr
    assert "checks passed" in r.stdout


def test_bad_inputs_exit_two(tmp_path):
    assert run_cli(
        "variance", "--O", "bogus:x", "--n", "2", "--samples", "100",
        "--const-samples", "100",
    ).returncode == 2
    assert run_cli(
        "variance", "--case", "offsite-plus", "--n", "3", "--delta", "2",
        "--samples", "100", "--const-samples", "100",
    ).returncode == 2
    bad = tmp_path / "bad.layout"
    bad.write_text("qubits 4\n0 1\nnot a gate\n")
    assert run_cli(
        "circuit", "--layout", "file", "--layout-file", str(bad), "--samples", "100"
    ).returncode == 2
    assert run_cli("variance", "--unknown-flag").returncode == 2
