import subprocess
import sys
from pathlib import Path

import pytest

from qcomp import cli, selftest

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_validate_prints_canonical_config(capsys):
    assert cli.main(["validate", str(CONFIGS / "max_power_vs_sinr.cfg")]) == 0
    out = capsys.readouterr().out
    assert "bits = [2, 3, inf]" in out
    assert "# ok: 300 sweep points" in out


def test_validate_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("n_cells = 2\nn_users = 1\n")
    assert cli.main(["validate", str(bad)]) == cli.EXIT_USAGE
    assert "n_antennas" in capsys.readouterr().err


def test_run_writes_outputs(tmp_path, capsys):
    code = cli.main(["run", str(CONFIGS / "single_run.cfg"), "--out", str(tmp_path), "--jobs", "1", "--no-figures"])
    assert code == 0
    out = capsys.readouterr().out
    assert "baseline" in out and "pa" in out
    assert (tmp_path / "runs.csv").exists()
    assert not (tmp_path / "trace.png").exists()


def test_nonconverged_exit_code(tmp_path, capsys):
    cfg = tmp_path / "x.cfg"
    cfg.write_text("n_cells = 1\nn_users = 1\nn_antennas = 1\nsinr_db = [30]\nbits = [1]\nshadowing_std_db = 0\n")
    args = ["run", str(cfg), "--out", str(tmp_path / "o"), "--jobs", "1", "--no-figures"]
    assert cli.main(args) == cli.EXIT_NONCONVERGED
    assert "did not converge" in capsys.readouterr().err
    assert cli.main(args + ["--allow-nonconverged"]) == 0


def test_bad_jobs(tmp_path):
    assert cli.main(["run", str(CONFIGS / "single_run.cfg"), "--out", str(tmp_path), "--jobs", "0"]) == cli.EXIT_USAGE


def test_selftest_passes(capsys):
    assert cli.main(["selftest"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == len(selftest.CHECKS)
    assert all(line.startswith("PASS") for line in lines)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "qcomp.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    assert "selftest" in r.stdout
