import math

import numpy as np
import pytest

from stored_light.core.controls import ControlSchedule, ControlSet, Segment
from stored_light.exceptions import ConfigurationError, GridMismatchError, NumericFaultError
from stored_light.simulation.medium import (
    FieldState,
    LocalPropagator,
    MediumParams,
    check_cfl,
    excitation_norm,
    scaled_rhs,
    step,
)


def _constant_schedule(omega=20.0, t_end=50.0):
    return ControlSchedule((Segment(0.0, t_end, omega, omega, ControlSet(0.3, 0.2, 0.1)),))


def _random_state(cells, seed=0):
    rng = np.random.default_rng(seed)
    return FieldState.from_array(rng.normal(size=(4, cells)) + 1j * rng.normal(size=(4, cells)))


def test_default_grid():
    params = MediumParams()
    assert params.cfl == 1.0
    assert params.dz == pytest.approx(21.0 / 4096)
    assert params.dt == pytest.approx(params.dz)
    assert params.z[0] == pytest.approx(0.5 * params.dz)


def test_cfl_limits():
    with pytest.raises(ConfigurationError):
        MediumParams(cfl=1.5)
    params = MediumParams(cells=256)
    with pytest.raises(ConfigurationError):
        check_cfl(params, 2.0 * params.dz)
    assert check_cfl(params, 0.5 * params.dz) == pytest.approx(0.5)


def test_grid_mismatch():
    params = MediumParams(cells=256)
    with pytest.raises(GridMismatchError):
        step(FieldState.zeros(128), _constant_schedule(), params, params.dt)
    with pytest.raises(GridMismatchError):
        FieldState(np.zeros(3), np.zeros(4), np.zeros(4), np.zeros(4))


def test_non_finite_values_are_rejected():
    params = MediumParams(cells=64)
    state = FieldState.zeros(64)
    state.s_c[3] = np.nan
    with pytest.raises(NumericFaultError):
        scaled_rhs(state, 1.0, 0.0, params.kappa_profile())
    with pytest.raises(NumericFaultError):
        step(state, _constant_schedule(), params, params.dt)


def test_rhs_is_anti_hermitian():
    params = MediumParams(cells=128)
    state = _random_state(128, seed=1)
    rhs = scaled_rhs(state, 3.0 + 4.0j, -2.0j, params.kappa_profile())
    # d/dt ‖X‖² = 2 Re⟨X, Ẋ⟩ = 0 (국소 부분)
    inner = np.vdot(state.as_array(), rhs.as_array())
    assert abs(inner.real) < 1e-9


def test_local_propagator_is_unitary_and_cached():
    params = MediumParams(cells=256)
    propagator = LocalPropagator(params.kappa_profile())
    props = propagator.matrices(12.0 + 5.0j, 3.0, 0.01)
    for prop in props:
        assert np.allclose(prop @ prop.conj().T, np.eye(4), atol=1e-12)
    propagator.matrices(12.0 + 5.0j, 3.0, 0.01)
    assert (propagator.hits, propagator.misses) == (1, 1)


def test_stored_coherence_is_stationary_without_controls():
    params = MediumParams(cells=256)
    state = FieldState.zeros(256)
    inside = (params.z > 13.0) & (params.z < 19.0)
    state.s_c[inside] = np.exp(-((params.z[inside] - 16.0) ** 2))
    schedule = _constant_schedule(omega=0.0)
    out = state
    for _ in range(20):
        out = step(out, schedule, params, params.dt)
    assert np.allclose(out.s_c, state.s_c, atol=1e-13)
    assert np.max(np.abs(out.u)) < 1e-13


def test_vacuum_shift_is_one_cell_per_step():
    params = MediumParams(cells=256, sample_start=0.0, sample_length=0.0)
    state = FieldState.zeros(256)
    state.u[10] = 1.0
    out = step(state, _constant_schedule(omega=0.0), params, params.dt)
    assert abs(out.u[11] - 1.0) < 1e-12
    assert abs(out.u[10]) < 1e-12
    assert out.t == pytest.approx(params.dt)


def test_norm_is_conserved_away_from_edges():
    params = MediumParams(cells=256)
    state = FieldState.zeros(256)
    state.s_c[:] = np.exp(-((params.z - 15.0) ** 2))
    norm0 = excitation_norm(state, params.dz)
    schedule = _constant_schedule()
    propagator = LocalPropagator(params.kappa_profile())
    out = state
    for _ in range(10):
        out = step(out, schedule, params, params.dt, propagator=propagator)
    assert excitation_norm(out, params.dz) == pytest.approx(norm0, rel=1e-12)
    assert propagator.hits > 0


def test_step_leaves_input_untouched():
    params = MediumParams(cells=128)
    state = _random_state(128, seed=4)
    before = state.as_array().copy()
    step(state, _constant_schedule(), params, params.dt)
    assert np.array_equal(state.as_array(), before)


def test_smooth_sample_edges():
    params = MediumParams(cells=1024, edge_width=0.25)
    profile = params.kappa_profile()
    z = params.z
    assert profile[np.argmin(np.abs(z - 16.0))] == pytest.approx(params.kappa, rel=1e-6)
    assert profile[np.argmin(np.abs(z - 2.0))] == pytest.approx(0.0, abs=1e-9)
    assert profile[np.argmin(np.abs(z - params.sample_start))] == pytest.approx(0.5 * params.kappa, rel=0.05)
    assert np.all(np.diff(profile[z < 16.0]) >= -1e-12)
    assert not math.isclose(profile.max(), profile.min())
