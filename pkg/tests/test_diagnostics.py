import math

import pytest

from stored_light.simulation.diagnostics import ADIABATICITY_LIMIT, validate


def test_default_scenario_is_clean(make_scenario):
    diagnostics = validate(make_scenario(medium={"cells": 672}))
    assert diagnostics.cfl == 1.0
    assert diagnostics.adiabaticity == pytest.approx(0.063, abs=5e-3)
    assert diagnostics.grid_resolution == pytest.approx(32.0)
    assert diagnostics.stored_resolution == pytest.approx(16.0)
    assert diagnostics.steps == 54 * 32
    assert diagnostics.warnings == []


def test_coarse_grid_warns(make_scenario):
    diagnostics = validate(make_scenario())
    assert any("cells per packet width" in w for w in diagnostics.warnings)


def test_square_ramp_warns(make_scenario):
    diagnostics = validate(make_scenario(controls={"ramp_shape": "square"}))
    assert diagnostics.adiabaticity > ADIABATICITY_LIMIT
    assert any(w.startswith("adiabaticity") for w in diagnostics.warnings)
    assert any("sqrt(κ² + Ω²)" in w for w in diagnostics.warnings)
    assert any("square ramps" in w for w in diagnostics.warnings)
    assert diagnostics.warnings == sorted(diagnostics.warnings)


def test_stage2_override_warns(make_scenario):
    scenario = make_scenario(
        medium={"cells": 672},
        release={"phi": 0.25 * math.pi, "stage2": {"phi": 0.25 * math.pi}},
    )
    diagnostics = validate(scenario)
    assert diagnostics.warnings == ["stage-2 set is not complementary to stage 1; release may be incomplete"]

    complementary = make_scenario(
        medium={"cells": 672},
        release={"phi": 0.25 * math.pi, "stage2": {"phi": 0.25 * math.pi, "chi2": math.pi}},
    )
    assert validate(complementary).warnings == []


def test_late_storage_warns(make_scenario):
    scenario = make_scenario(medium={"cells": 672}, storage=[{"phi": 0.0, "switch_off": 20.0}])
    assert any("leading edge" in w for w in validate(scenario).warnings)


def test_to_dict(make_scenario):
    data = validate(make_scenario()).to_dict()
    assert set(data) == {"cfl", "adiabaticity", "grid_resolution", "stored_resolution", "steps", "warnings"}
