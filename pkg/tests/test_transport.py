import math

import numpy as np
import pytest

from stored_light.core.controls import ControlSchedule, ControlSet, Segment
from stored_light.core.interference import WavePacket
from stored_light.core.polariton import shift_profile
from stored_light.simulation.verification import (
    centroid,
    dark_packet,
    evolve,
    psi_profile,
    refinement_study,
    steady_basis,
    total_density,
    uniform_medium,
)

OMEGA = 20.0
CONTROL = ControlSet(0.0)


def _schedule(t_end=10.0):
    return ControlSchedule((Segment(0.0, t_end, OMEGA, OMEGA, CONTROL),))


def _relative_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_dark_polariton_keeps_its_shape():
    params = uniform_medium(OMEGA, 16.0, 2048)
    basis = steady_basis(params, CONTROL, OMEGA)
    state = dark_packet(params, basis, WavePacket.gaussian(6.0, 1.0))
    psi0 = psi_profile(state, basis)

    final = evolve(state, params, _schedule(), 4.0)
    # θ = π/4 이므로 c·cos²θ·T = 2
    expected = shift_profile(psi0, 2.0, params.dz)
    assert _relative_l2(psi_profile(final, basis), expected) < 1e-2


@pytest.mark.parametrize("theta", [math.pi / 6, math.pi / 4, math.pi / 3])
def test_group_velocity(theta):
    kappa = OMEGA * math.tan(theta)
    params = uniform_medium(kappa, 16.0, 2048)
    basis = steady_basis(params, CONTROL, OMEGA)
    state = dark_packet(params, basis, WavePacket.gaussian(4.0, 0.75))
    start = centroid(params.z, total_density(state))

    final = evolve(state, params, _schedule(), 4.0)
    shift = centroid(params.z, total_density(final)) - start
    expected = math.cos(theta) ** 2 * 4.0
    assert shift == pytest.approx(expected, rel=1e-2)


def _narrow_packet_run(cells):
    params = uniform_medium(OMEGA, 16.0, cells)
    basis = steady_basis(params, CONTROL, OMEGA)
    state = dark_packet(params, basis, WavePacket.gaussian(5.0, 0.5))
    psi0 = psi_profile(state, basis)
    # 3 = 3·cells/16 스텝: 모든 격자에서 정수
    final = evolve(state, params, _schedule(), 3.0)
    return psi0, psi_profile(final, basis), params.dz


def test_narrow_packet_follows_analytic_transport():
    psi0, psi1, dz = _narrow_packet_run(1024)
    # c·cos²θ·T = 1.5
    expected = shift_profile(psi0, 1.5, dz)
    assert _relative_l2(psi1, expected) < 1e-2


def test_grid_refinement_is_second_order():
    def solve(cells):
        return _narrow_packet_run(cells)[1]

    study = refinement_study(solve, [1024, 2048, 4096], 16.0)
    assert len(study.errors) == 2
    assert 3.0 <= study.ratios[0] <= 5.0
