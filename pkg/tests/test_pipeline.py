import json
import math
from dataclasses import replace

import pandas as pd
import pytest

from stored_light.core.database import RunLedger
from stored_light.exceptions import ScenarioValidationError
from stored_light.runner.pipeline import run_scenario, selfcheck, separation_sweep

TWO_PACKETS = [{"center": 6.0, "width": 1.0}, {"center": 6.0, "width": 1.0}]
HALF = {"phi": 0.25 * math.pi}
WEBHOOK = "https://hooks.example.com/services/test"


def _in_dir(scenario, path):
    return replace(scenario, outputs=replace(scenario.outputs, dir=str(path)))


def test_selfcheck_passes():
    report = selfcheck(seed=3, draws=200)
    assert report["passed"]
    assert set(report["worst"]) == {"unitarity", "closure", "oracle", "phase_law"}


def test_outputs_are_deterministic(make_scenario, tmp_path):
    scenario = make_scenario(release=HALF)
    run_scenario(_in_dir(scenario, tmp_path / "a"))
    run_scenario(_in_dir(scenario, tmp_path / "b"))
    for name in ("test.csv", "test.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    summary = json.loads((tmp_path / "a" / "test.json").read_text(encoding="utf-8"))
    assert summary["schema_version"] == 1
    assert summary["kind"] == "simulate"
    assert summary["two_photon"] is None
    frame = pd.read_csv(tmp_path / "a" / "test.csv")
    assert list(frame.columns) == ["t", "flux", "norm", "theta", "phi"]


def test_record_every_thins_timeseries(make_scenario, tmp_path):
    full = run_scenario(make_scenario())
    thinned = make_scenario(outputs={"dir": str(tmp_path / "thin"), "name": "test", "record_every": 4})
    run_scenario(thinned)
    rows_full = len(pd.read_csv(tmp_path / "results" / "test.csv"))
    rows_thin = len(pd.read_csv(tmp_path / "thin" / "test.csv"))
    assert rows_thin == math.ceil(rows_full / 4)
    assert full["fractions"]["stage1"] > 0.8


def test_ledger_and_webhook(make_scenario, tmp_path, requests_mock):
    requests_mock.post(WEBHOOK, json={"ok": True})
    ledger = RunLedger(str(tmp_path / "runs.db"))
    scenario = make_scenario(notify={"webhook_url": WEBHOOK})
    run_scenario(scenario, ledger=ledger)
    rows = ledger.load_runs()
    ledger.close()

    assert len(rows) == 1
    assert rows[0]["name"] == "test"
    assert rows[0]["fraction_stage1"] == pytest.approx(json.loads(rows[0]["summary"])["fractions"]["stage1"])
    assert requests_mock.call_count == 1
    assert "blocks" in requests_mock.last_request.json()


def test_ledger_path_from_outputs(make_scenario, tmp_path):
    db = tmp_path / "ledger.db"
    scenario = make_scenario(outputs={"dir": str(tmp_path / "out"), "name": "pair", "ledger": str(db)})
    run_scenario(scenario)
    run_scenario(scenario)
    ledger = RunLedger(str(db))
    assert [r["name"] for r in ledger.load_runs("pair")] == ["pair", "pair"]
    ledger.close()


def test_closed_form_sweep_is_written_sorted(make_scenario, tmp_path):
    scenario = make_scenario(sweep={"axis": "separation", "start": 3.0, "stop": 0.0, "points": 4})
    summary = run_scenario(scenario)
    frame = pd.read_csv(tmp_path / "results" / "test_sweep.csv")
    assert frame["x"].tolist() == [0.0, 1.0, 2.0, 3.0]
    assert summary["sweep"]["x"] == [0.0, 1.0, 2.0, 3.0]


def test_separation_sweep_needs_two_packets(make_scenario):
    scenario = make_scenario(sweep={"axis": "separation", "end_to_end": True, "points": 2, "stop": 1.0})
    with pytest.raises(ScenarioValidationError):
        separation_sweep(scenario)


def test_separation_sweep_end_to_end(make_scenario):
    scenario = make_scenario(
        packets=TWO_PACKETS,
        release=HALF,
        sweep={"axis": "separation", "end_to_end": True, "start": 2.0, "stop": 0.0, "points": 3},
    )
    frame = separation_sweep(scenario, workers=2)
    assert frame["x"].tolist() == [0.0, 1.0, 2.0]
    assert frame["abs_s"].is_monotonic_decreasing
    assert frame["p_noncoal_closed_form"].is_monotonic_increasing


def test_two_photon_coalescence(make_scenario):
    scenario = make_scenario(medium={"cells": 2048}, packets=TWO_PACKETS, release=HALF)
    summary = run_scenario(scenario)
    assert summary["packets"] == 2
    assert summary["two_photon"]["p_noncoal"] < 1e-2
    assert summary["two_photon_closed_form"]["p_noncoal"] < 1e-3
    assert summary["stored_overlap"][0] == pytest.approx(summary["two_photon"]["s"][0])
    assert summary["conservation_residual"] < 1e-6
