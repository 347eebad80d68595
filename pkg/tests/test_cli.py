import json

import pandas as pd
import pytest

from stored_light.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main


@pytest.fixture
def run_cli(tmp_path):
    def _run(*args):
        return main(["--log-dir", str(tmp_path / "logs"), *args])
    return _run


@pytest.fixture
def config_file(tmp_path, make_doc):
    def _write(**sections):
        doc = make_doc(**sections)
        doc.setdefault("outputs", {"dir": str(tmp_path / "results"), "name": "cli"})
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        return str(path)
    return _write


def test_bs_matrix_identity(run_cli, capsys):
    assert run_cli("bs-matrix") == EXIT_OK
    out = capsys.readouterr().out
    assert "+1.000000" in out
    assert "‖R†R − I‖" in out


def test_hom_scan_without_config(run_cli, tmp_path):
    out_dir = tmp_path / "scan"
    assert run_cli("hom-scan", "--out", str(out_dir), "--points", "11", "--stop", "2.5") == EXIT_OK
    frame = pd.read_csv(out_dir / "hom_scan.csv")
    assert len(frame) == 11
    assert frame["p_noncoal"].idxmin() == 0
    assert frame["p_noncoal"].iloc[0] == pytest.approx(0.0, abs=1e-12)
    assert not (out_dir / "hom_scan.json").exists()


def test_hom_scan_requires_sweep_section(run_cli, config_file):
    assert run_cli("hom-scan", "--config", config_file()) == EXIT_USAGE


def test_validate(run_cli, config_file, capsys):
    assert run_cli("validate", "--config", config_file()) == EXIT_OK
    assert "cells per packet width" in capsys.readouterr().out

    bad = config_file(medium={"cells": 256, "cfl": 1.5})
    assert run_cli("validate", "--config", bad) == EXIT_USAGE


def test_missing_config_file(run_cli, tmp_path):
    assert run_cli("validate", "--config", str(tmp_path / "nope.json")) == EXIT_USAGE


def test_unknown_subcommand(run_cli):
    with pytest.raises(SystemExit) as exc:
        run_cli("transmogrify")
    assert exc.value.code != 0


def test_selfcheck(run_cli):
    assert run_cli("selfcheck", "--draws", "50") == EXIT_OK


def test_selfcheck_failure_exit_code(run_cli, mocker):
    mocker.patch(
        "stored_light.cli.selfcheck",
        return_value={"worst": {"oracle": 1.0}, "tolerances": {"oracle": 1e-10}, "passed": False},
    )
    assert run_cli("selfcheck", "--draws", "1") == EXIT_RUNTIME


def test_simulate_writes_outputs(run_cli, config_file, tmp_path, capsys):
    path = config_file()
    assert run_cli("simulate", "--config", path, "--out", str(tmp_path / "sim"), "--format", "json") == EXIT_OK
    assert (tmp_path / "sim" / "cli.json").exists()
    assert not (tmp_path / "sim" / "cli.csv").exists()
    assert "fraction stage1" in capsys.readouterr().out
    assert (tmp_path / "logs" / "run.log").exists()
