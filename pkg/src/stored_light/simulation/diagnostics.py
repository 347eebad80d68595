"""
시나리오 사전 진단: CFL, 단열성, 격자 해상도
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List

import numpy as np

from stored_light.core.controls import RampShape, complementary

logger = logging.getLogger(__name__)

ADIABATICITY_LIMIT = 0.1
MIN_CELLS_PER_WIDTH = 16.0


@dataclass
class Diagnostics:
    """
    Args:
        cfl: c·dt/dz
        adiabaticity: max |θ̇| / sqrt(κ² + Ω²) (램프 전체에서)
        grid_resolution: 입력 묶음 폭당 셀 수 (최솟값)
        stored_resolution: 매질 안에서 압축된 폭(δ·cos²θ) 당 셀 수
        steps: 전체 타임라인 스텝 수
        warnings: 정렬된 경고 목록
    """
    cfl: float
    adiabaticity: float
    grid_resolution: float
    stored_resolution: float
    steps: int
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return asdict(self)


def adiabaticity(schedule, kappa: float, dt: float) -> float:
    """dt 간격으로 θ(t) 를 샘플해 max |θ̇| / sqrt(κ² + Ω²) 를 구합니다."""
    n = max(int(math.floor((schedule.t_end - schedule.t_start) / dt)), 1) + 1
    times = schedule.t_start + np.arange(n) * dt
    times[-1] = min(times[-1], schedule.t_end)
    omega = np.array([schedule.segment_at(float(t)).envelope(float(t)) for t in times])
    theta = np.arctan2(kappa, omega)
    if n < 2:
        return 0.0
    rate = np.abs(np.gradient(theta, times))
    return float(np.max(rate / np.sqrt(kappa ** 2 + omega ** 2)))


def validate(scenario) -> Diagnostics:
    """
    진단값을 계산하고 경고를 모읍니다. 실패로 처리하지 않습니다.
    """
    from stored_light.runner.timeline import build_timeline, transparency_factor

    medium = scenario.medium
    timeline = build_timeline(scenario)
    warnings: List[str] = []

    adiab = adiabaticity(timeline.schedule, medium.kappa, medium.dt)
    if adiab > ADIABATICITY_LIMIT:
        warnings.append(
            f"adiabaticity {adiab:.3g} exceeds {ADIABATICITY_LIMIT} "
            f"(max |dθ/dt| / sqrt(κ² + Ω²), looser than |dθ/dt| / Ω near switch-off; θ varies too fast)"
        )
    if scenario.controls.ramp_shape == RampShape.SQUARE:
        warnings.append("square ramps switch the controls instantaneously")

    factor = transparency_factor(scenario)
    widths = [p.width for p in scenario.packets]
    resolution = min(widths) / medium.dz
    stored = min(widths) * factor / medium.dz
    if resolution < MIN_CELLS_PER_WIDTH:
        warnings.append(f"only {resolution:.1f} cells per packet width (< {MIN_CELLS_PER_WIDTH:g})")

    # 저장 직전 묶음 앞부분이 시료 끝을 넘어가는지 확인
    for i, (packet, delay, sw) in enumerate(zip(scenario.packets, timeline.delays, timeline.switch_offs)):
        front_entry = delay + (medium.sample_start - (packet.center + 6.0 * packet.width)) / medium.c
        front_at_stop = medium.sample_start + medium.c * factor * (sw + scenario.controls.ramp - front_entry)
        if front_at_stop > medium.sample_end:
            warnings.append(f"packet {i} leading edge leaves the sample before storage completes")

    release = scenario.release
    if release.overridden and not complementary(release.control).equivalent(release.stage2):
        warnings.append("stage-2 set is not complementary to stage 1; release may be incomplete")

    steps = int(math.floor(timeline.t_end / medium.dt + 1e-9))
    diagnostics = Diagnostics(medium.cfl, adiab, resolution, stored, steps, sorted(warnings))
    for w in diagnostics.warnings:
        logger.warning(f"⚠️ {w}")
    return diagnostics
