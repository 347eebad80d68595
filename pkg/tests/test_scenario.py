import json
import math
from pathlib import Path

import pytest

from stored_light.core.controls import ControlSet, RampShape, complementary
from stored_light.exceptions import (
    MissingKeyError,
    ScenarioSyntaxError,
    ScenarioValidationError,
    UnknownKeyError,
)
from stored_light.runner.scenario import (
    MEDIUM_KEYS,
    dump_scenario,
    load_scenario,
    parse_scenario,
    with_second_switch_off,
)

CONFIG = Path(__file__).resolve().parent.parent / "config" / "scenario.json"


def _parse(doc):
    return parse_scenario(json.dumps(doc))


def test_defaults(make_doc):
    scenario = _parse(make_doc())
    assert scenario.medium.cells == 256
    assert scenario.medium.kappa == 20.0
    assert scenario.controls.omega == 20.0
    assert scenario.controls.ramp_shape == RampShape.COS2
    assert scenario.storage[0].control == ControlSet(0.0)
    assert scenario.release.stage2_set.equivalent(complementary(ControlSet(0.0)))
    assert scenario.outputs.format == "both"
    assert scenario.sweep is None
    assert not scenario.two_packets


def test_unknown_keys_suggest_nearest(make_doc):
    with pytest.raises(UnknownKeyError) as exc:
        _parse(make_doc(medium={"cells": 256, "dampin": 0.1}))
    assert exc.value.suggestion in MEDIUM_KEYS

    with pytest.raises(UnknownKeyError) as exc:
        _parse(make_doc(medium={"kapa": 20.0}))
    assert exc.value.suggestion == "kappa"
    assert "medium.kapa" in str(exc.value)


def test_missing_required_keys(make_doc):
    doc = make_doc()
    del doc["release"]
    with pytest.raises(MissingKeyError) as exc:
        _parse(doc)
    assert exc.value.key == "release"

    with pytest.raises(MissingKeyError) as exc:
        _parse(make_doc(packets=[{"center": 6.0}]))
    assert exc.value.key == "packets[0].width"


def test_second_port_must_be_complementary(make_doc):
    two = [{"center": 6.0, "width": 1.0}, {"center": 6.0, "width": 1.0}]
    with pytest.raises(ScenarioValidationError, match="상보"):
        _parse(make_doc(packets=two, storage=[{"phi": 0.0}, {"phi": 0.0}]))

    scenario = _parse(make_doc(packets=two, storage=[{"phi": 0.3}]))
    assert scenario.storage[1].control.equivalent(complementary(ControlSet(0.3)))


def test_round_trip(make_doc):
    doc = make_doc(
        controls={"ramp_shape": "square", "stage_hold": 12.5},
        sweep={"axis": "width_ratio", "start": 0.5, "stop": 2.0, "points": 7},
        notify={"webhook_url": "https://hooks.example.com/x"},
    )
    scenario = _parse(doc)
    assert parse_scenario(dump_scenario(scenario)) == scenario


def test_syntax_error_reports_line():
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario('{\n  "medium": ,\n}')
    assert exc.value.line == 2


@pytest.mark.parametrize(
    "sections",
    [
        {"medium": {"cells": 256, "cfl": 1.5}},
        {"packets": [{"center": 6.0, "width": -1.0}]},
        {"packets": [{"center": 6.0, "width": 1.0}] * 3},
        {"controls": {"ramp_shape": "cos"}},
        {"release": {"phi": 2.0}},
        {"outputs": {"format": "xml"}},
        {"sweep": {"axis": "width_ratio", "end_to_end": True}},
        {"packets": [{"center": 15.0, "width": 1.0}]},
    ],
)
def test_invalid_scenarios(make_doc, sections):
    with pytest.raises(ScenarioValidationError):
        _parse(make_doc(**sections))


def test_bad_ramp_shape_suggests(make_doc):
    with pytest.raises(ScenarioValidationError) as exc:
        _parse(make_doc(controls={"ramp_shape": "cos"}))
    assert exc.value.details["suggestion"] == "cos2"


def test_load_from_file(tmp_path, make_doc):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(make_doc()), encoding="utf-8")
    assert load_scenario(str(path)).medium.cells == 256

    shipped = load_scenario(str(CONFIG))
    assert shipped.two_packets
    assert shipped.release.control.phi == pytest.approx(0.25 * math.pi)


def test_with_second_switch_off(make_doc):
    two = [{"center": 6.0, "width": 1.0}, {"center": 6.0, "width": 1.0}]
    scenario = _parse(make_doc(packets=two))
    moved = with_second_switch_off(scenario, 30.0)
    assert moved.storage[1].switch_off == 30.0
    assert moved.storage[0] == scenario.storage[0]
