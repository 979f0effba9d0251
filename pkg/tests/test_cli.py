"""End-to-end CLI behavior through subprocesses: outputs and exit codes."""

import subprocess
import sys

import numpy as np
import pytest

from cpesim.io import read_state_dump

BASE = """
grid.nx1 = 8
grid.nx2 = 8
grid.nz = 4
params.nu = 0.01
params.r = 0.5
solver.t_end = 0.02
solver.dt_fixed = 0.005
initial.profile = smooth-flow
initial.amplitude = 0.15
initial.u_amplitude = 0.25
"""

BLOWUP = """
grid.nx1 = 8
grid.nx2 = 8
grid.nz = 4
params.nu = 0.05
solver.t_end = 50.0
solver.dt_fixed = 5.0
initial.profile = smooth-flow
initial.amplitude = 0.15
initial.u_amplitude = 0.25
"""


def cli(*argv, cwd):
    return subprocess.run(
        [sys.executable, "-m", "cpesim.cli", *argv],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture()
def base_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE)
    return path


def test_simulate_writes_outputs(tmp_path, base_config):
    proc = cli("simulate", "--config", str(base_config), cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert "simulate: t = 0.02" in proc.stdout
    assert "outputs in out" in proc.stdout

    csv = (tmp_path / "out" / "diagnostics.csv").read_text().splitlines()
    assert csv[0].startswith("t,dt,E,")
    assert len(csv) == 1 + 5  # initial snapshot + 4 steps at dump_every 1

    dims, fields = read_state_dump(tmp_path / "out" / "fields_000000.cpe")
    assert dims == (8, 8, 4)
    assert set(fields) == {"xi", "u1", "u2", "w"}
    assert (tmp_path / "out" / "fields_000004.cpe").exists()


def test_override_flags_both_forms(tmp_path, base_config):
    proc = cli(
        "simulate",
        "--config",
        str(base_config),
        "--grid.nz=6",
        "--output.dir",
        "alt",
        cwd=tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    dims, _ = read_state_dump(tmp_path / "alt" / "fields_000000.cpe")
    assert dims == (8, 8, 6)


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("grid.typo = 8\n")
    proc = cli("simulate", "--config", str(bad), cwd=tmp_path)
    assert proc.returncode == 2
    assert "error: config: line 1: unknown key" in proc.stderr

    proc = cli("simulate", "--config", str(tmp_path / "absent.cfg"), cwd=tmp_path)
    assert proc.returncode == 2
    assert "cannot read config" in proc.stderr

    proc = cli("simulate", "stray", cwd=tmp_path)
    assert proc.returncode == 2
    assert "unexpected argument" in proc.stderr


def test_numerical_failure_exits_3_with_partial_outputs(tmp_path):
    cfg = tmp_path / "blowup.cfg"
    cfg.write_text(BLOWUP)
    proc = cli("simulate", "--config", str(cfg), cwd=tmp_path)
    assert proc.returncode == 3
    assert "numerical failure" in proc.stderr
    # diagnostics collected before the failure are preserved
    csv = (tmp_path / "out" / "diagnostics.csv").read_text().splitlines()
    assert len(csv) > 1
    assert (tmp_path / "out" / "fields_000000.cpe").exists()


def test_dump_io_failures_exit_4(tmp_path, base_config):
    proc = cli(
        "simulate",
        "--config",
        str(base_config),
        "--initial.dump=missing.cpe",
        cwd=tmp_path,
    )
    assert proc.returncode == 4
    assert "error: i/o:" in proc.stderr

    junk = tmp_path / "junk.cpe"
    junk.write_bytes(b"XXXX" + bytes(64))
    proc = cli(
        "simulate",
        "--config",
        str(base_config),
        f"--initial.dump={junk}",
        cwd=tmp_path,
    )
    assert proc.returncode == 4
    assert "bad magic" in proc.stderr


def test_simulate_from_dump_round_trip(tmp_path, base_config):
    first = cli("simulate", "--config", str(base_config), cwd=tmp_path)
    assert first.returncode == 0, first.stderr
    dump = tmp_path / "out" / "fields_000004.cpe"
    proc = cli(
        "simulate",
        "--config",
        str(base_config),
        f"--initial.dump={dump}",
        "--output.dir=resumed",
        cwd=tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "resumed" / "diagnostics.csv").exists()


def test_scale_audit_reduced_terms(tmp_path):
    proc = cli("scale-audit", cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert "reduced system (11 terms):" in proc.stdout
    assert "mass.time-derivative" in proc.stdout
    assert "vertical-momentum.pressure-gradient" in proc.stdout
    assert "kept" in proc.stdout and "dropped" in proc.stdout


def test_scale_audit_no_regime(tmp_path):
    proc = cli("scale-audit", "--no-regime", cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert "regime not applied; reduction refused by construction" in proc.stdout
    assert "reduced system" not in proc.stdout


def test_mms_subcommand_reports_orders(tmp_path, base_config):
    proc = cli(
        "mms",
        "--config",
        str(base_config),
        "--levels",
        "2",
        "--solver.t_end=0.005",
        cwd=tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    assert "observed order (level 0 -> 1):" in proc.stdout


def test_study_subcommand(tmp_path, base_config):
    proc = cli(
        "study",
        "--config",
        str(base_config),
        "--study.count=2",
        "--study.base_amplitude=0.2",
        "--solver.t_end=0.01",
        cwd=tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    assert "shared dt = 5.000000e-03" in proc.stdout
    assert proc.stdout.count("yes") >= 1


def test_transform_check_subcommand(tmp_path, base_config):
    proc = cli(
        "transform-check",
        "--config",
        str(base_config),
        "--solver.t_end=0.01",
        cwd=tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    assert "stratification residual:" in proc.stdout
    assert "hydrostatic residual:" in proc.stdout
    assert "mass-equation residual:" in proc.stdout

    strat = float(proc.stdout.split("stratification residual:")[1].split()[0])
    assert strat <= 1e-12


def test_determinism_of_diagnostics(tmp_path, base_config):
    a = cli("simulate", "--config", str(base_config), "--output.dir=a", cwd=tmp_path)
    b = cli("simulate", "--config", str(base_config), "--output.dir=b", cwd=tmp_path)
    assert a.returncode == 0 and b.returncode == 0
    bytes_a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
    bytes_b = (tmp_path / "b" / "diagnostics.csv").read_bytes()
    assert bytes_a == bytes_b
    assert np.frombuffer(
        (tmp_path / "a" / "fields_000004.cpe").read_bytes()[36:], dtype=np.uint8
    ).size > 0
