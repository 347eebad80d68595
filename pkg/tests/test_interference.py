import math

import numpy as np
import pytest

from stored_light.core.controls import ControlSet
from stored_light.core.interference import (
    WavePacket,
    bs_matrix,
    coalescence_amplitude,
    coalescence_probs,
    fock_oracle,
    fock_oracle_from_overlap,
    gaussian_overlap,
    hom_scan,
    noncoal_gaussian,
    overlap,
    random_control_set,
    stats_from_modes,
)
from stored_light.exceptions import GridMismatchError, InvalidParameterError, UnnormalizedPacketError

QUARTER_PI = 0.25 * math.pi


def _random_s(rng):
    return complex(rng.uniform(0.0, 1.0) * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))


def test_bs_matrix_unitary_on_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        r = bs_matrix(random_control_set(rng), random_control_set(rng))
        assert r.unitarity_error() < 1e-12


def test_bs_matrix_identity_for_identical_sets():
    cs = ControlSet(0.4, 1.1, 2.3)
    assert np.allclose(bs_matrix(cs, cs).r, np.eye(2), atol=1e-15)


def test_half_coalescence_for_identical_photons():
    stats = coalescence_probs(ControlSet(0.0), ControlSet(QUARTER_PI), 1.0)
    assert stats.p_coal1 == pytest.approx(0.5, abs=1e-15)
    assert stats.p_coal2 == pytest.approx(0.5, abs=1e-15)
    assert stats.p_noncoal == pytest.approx(0.0, abs=1e-12)

    oracle = fock_oracle_from_overlap(bs_matrix(ControlSet(0.0), ControlSet(QUARTER_PI)), 1.0)
    assert oracle.p_coal1 == pytest.approx(0.5, abs=1e-10)


def test_no_coalescence_without_mixing():
    # φ⁰ = φ¹ = 0 이면 R₃₂ = 0: 각 단계에서 한 광자씩
    stats = coalescence_probs(ControlSet(0.0), ControlSet(0.0), 0.8)
    assert stats.p_coal1 == 0.0
    assert stats.p_noncoal == pytest.approx(1.0)
    assert coalescence_amplitude(ControlSet(0.0), ControlSet(0.0), 0.8) == 0.0


@pytest.mark.parametrize(
    "a, d1, d2, expected, tol",
    [
        (0.0, 1.0, 1.0, 0.0, 1e-12),
        (0.0, 3.0, 1.0, 0.2, 1e-12),
        (10.0, 1.0, 1.0, 0.5, 1e-9),
    ],
)
def test_mandel_dip_points(a, d1, d2, expected, tol):
    s = gaussian_overlap(a, d1, d2)
    stats = coalescence_probs(ControlSet(0.0), ControlSet(QUARTER_PI), s)
    assert stats.p_noncoal == pytest.approx(expected, abs=tol)
    assert noncoal_gaussian(a, d1, d2) == pytest.approx(expected, abs=tol)


def test_hom_scan_shapes():
    frame = hom_scan("separation", np.linspace(5.0, 0.0, 51))
    assert list(frame.columns) == ["x", "p_noncoal", "p_coal1", "p_coal2", "abs_s"]
    assert frame["x"].is_monotonic_increasing
    assert frame["p_noncoal"].iloc[0] == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.diff(frame["p_noncoal"]) >= -1e-15)

    ratios = hom_scan("width_ratio", [0.25, 0.5, 1.0, 2.0, 4.0])
    p = ratios["p_noncoal"].to_numpy()
    # δ₂/δ₁ ↔ δ₁/δ₂ 대칭
    assert p[0] == pytest.approx(p[4], abs=1e-12)
    assert p[1] == pytest.approx(p[3], abs=1e-12)
    assert p[2] == pytest.approx(0.0, abs=1e-12)


def test_hom_scan_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        hom_scan("separation", [])
    with pytest.raises(InvalidParameterError):
        hom_scan("delay", [0.0])


def test_phase_law():
    base = ControlSet(QUARTER_PI)
    for s in (0.0, 0.5, 1.0):
        for delta in np.linspace(0.0, 2.0 * math.pi, 100, endpoint=False):
            p1 = coalescence_probs(base, ControlSet(QUARTER_PI, float(delta), 0.0), s).p_coal1
            assert p1 - 0.25 * (1.0 + s ** 2) * math.sin(delta) ** 2 == pytest.approx(0.0, abs=1e-12)


def test_oracle_matches_closed_form():
    rng = np.random.default_rng(11)
    overlaps = [0.0, 1.0, 1j] + [_random_s(rng) for _ in range(997)]
    for s in overlaps:
        set0, set1 = random_control_set(rng), random_control_set(rng)
        closed = coalescence_probs(set0, set1, s)
        oracle = fock_oracle_from_overlap(bs_matrix(set0, set1), s)
        assert oracle.p_coal1 == pytest.approx(closed.p_coal1, abs=1e-10)
        assert oracle.p_coal2 == pytest.approx(closed.p_coal2, abs=1e-10)
        assert oracle.p_noncoal == pytest.approx(closed.p_noncoal, abs=1e-10)
        assert abs(oracle.amp_coal1 - closed.amp_coal1) < 1e-10
        assert oracle.closure_error < 1e-12


def test_overlap_rejects_invalid_values():
    with pytest.raises(InvalidParameterError):
        coalescence_probs(ControlSet(0.0), ControlSet(0.1), 1.5)
    with pytest.raises(InvalidParameterError):
        gaussian_overlap(0.0, -1.0, 1.0)


def test_sampled_overlap_matches_gaussian():
    z = np.linspace(-12.0, 12.0, 4001)
    f1 = WavePacket.sampled(z, WavePacket.gaussian(0.0, 1.0).evaluate(z), normalize=True)
    f2 = WavePacket.gaussian(1.0, 1.0)
    assert overlap(f1, f2).real == pytest.approx(gaussian_overlap(1.0, 1.0, 1.0), abs=1e-8)
    assert overlap(WavePacket.gaussian(0.0, 1.0), WavePacket.gaussian(1.0, 1.0)) == pytest.approx(math.exp(-1.0 / 8.0))


def test_sampled_overlap_of_disjoint_packets_is_zero():
    z = np.linspace(-10.0, 10.0, 2001)
    left = np.where(np.abs(z + 5.0) < 1.0, np.cos(0.5 * math.pi * (z + 5.0)) ** 2, 0.0)
    right = np.where(np.abs(z - 5.0) < 1.0, np.cos(0.5 * math.pi * (z - 5.0)) ** 2, 0.0)
    f1 = WavePacket.sampled(z, left, normalize=True)
    f2 = WavePacket.sampled(z, right, normalize=True)
    assert overlap(f1, f2) == 0.0
    assert overlap(f1, f1) == pytest.approx(1.0)


def test_overlap_requires_normalized_packets():
    z = np.linspace(-10.0, 10.0, 201)
    loose = WavePacket.sampled(z, 2.0 * WavePacket.gaussian(0.0, 1.0).evaluate(z))
    with pytest.raises(UnnormalizedPacketError):
        overlap(loose, WavePacket.gaussian(0.0, 1.0))
    with pytest.raises(GridMismatchError):
        WavePacket(z=z, values=np.zeros(5))


def test_fock_oracle_from_packets():
    r = bs_matrix(ControlSet(0.0), ControlSet(QUARTER_PI))
    stats = fock_oracle(r, WavePacket.gaussian(0.0, 1.0), WavePacket.gaussian(2.0, 1.0))
    assert stats.p_noncoal == pytest.approx(noncoal_gaussian(2.0, 1.0, 1.0), abs=1e-12)


def test_stats_from_modes():
    dt = 0.01
    t = np.arange(0.0, 20.0, dt)
    g = np.exp(-((t - 5.0) ** 2) / 2.0).astype(complex)
    h = np.exp(-((t - 15.0) ** 2) / 2.0).astype(complex)
    g /= math.sqrt(np.sum(np.abs(g) ** 2) * dt)
    h /= math.sqrt(np.sum(np.abs(h) ** 2) * dt)
    half = 1.0 / math.sqrt(2.0)

    same = {"stage1": half * g, "stage2": half * g}
    stats = stats_from_modes(same, same, dt)
    assert stats.p_coal1 == pytest.approx(0.5)
    assert stats.p_noncoal == pytest.approx(0.0, abs=1e-12)
    assert abs(stats.s) == pytest.approx(1.0)
    assert stats.amp_coal1 is None

    other = {"stage1": half * h, "stage2": half * h}
    stats = stats_from_modes(same, other, dt, s=0.0)
    assert stats.p_coal1 == pytest.approx(0.25, abs=1e-12)
    assert stats.p_noncoal == pytest.approx(0.5, abs=1e-12)

    with pytest.raises(GridMismatchError):
        stats_from_modes(same, {"stage1": g[:10], "stage2": g[:10]}, dt)
