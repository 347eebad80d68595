"""
시나리오 → 제어 스케줄/단계 창/입력 소스 변환

타임라인: 투명 진입 → 제어장 끄기(저장) → [두 번째 묶음: 상보 구성으로 켜기 → 진입 → 끄기]
→ 1단계 방출(켜기, 유지, 끄기, 휴지) → 2단계 방출(켜기, 유지)
"""

import logging
from dataclasses import dataclass
from typing import Dict, List

from stored_light.core.controls import ControlSchedule, ControlSet, Segment
from stored_light.exceptions import ScenarioValidationError, StoredLightError
from stored_light.simulation.engine import PacketSource, StageWindow

logger = logging.getLogger(__name__)

TAIL_SIGMAS = 6.0
TIME_TOL = 1e-9


@dataclass
class Timeline:
    schedule: ControlSchedule
    windows: List[StageWindow]
    sources: List[PacketSource]
    t_end: float
    snapshot_times: Dict[str, float]
    storage_sets: List[ControlSet]
    release_sets: List[ControlSet]
    switch_offs: List[float]
    delays: List[float]
    stage_hold: float
    release_start: float


def transparency_factor(scenario) -> float:
    """제어장이 켜진 매질의 cos²θ = Ω²/(κ² + Ω²)"""
    omega = scenario.controls.omega
    kappa = scenario.medium.kappa
    return omega ** 2 / (kappa ** 2 + omega ** 2)


def front_arrival(packet, delay: float, medium) -> float:
    """묶음 앞 꼬리(center + 6δ)가 시료 입구에 닿는 시각"""
    return delay + (medium.sample_start - (packet.center + TAIL_SIGMAS * packet.width)) / medium.c


def back_arrival(packet, delay: float, medium) -> float:
    """묶음 뒤 꼬리(center - 6δ)가 시료 입구를 지나는 시각 (자동 저장 시각)"""
    return delay + (medium.sample_start - (packet.center - TAIL_SIGMAS * packet.width)) / medium.c


def auto_stage_hold(scenario) -> float:
    """방출된 묶음이 시료와 출구 진공을 모두 지나갈 만큼의 유지 시간"""
    medium = scenario.medium
    return (
        medium.sample_length / (medium.c * transparency_factor(scenario))
        + (medium.z_max - medium.sample_end) / medium.c
        + scenario.controls.settle
    )


def separation_offset(scenario, separation: float) -> float:
    """
    두 번째 묶음을 separation (저장된 폭 단위) 만큼 더 깊이 저장하려면 늦춰야 할 저장 시각.

    매질 안에서 묶음은 c·cos²θ 로 움직이고 폭도 δ·cos²θ 로 줄어들므로 두 인자가 상쇄되어 x·δ/c 가 됩니다.
    """
    return separation * scenario.packets[-1].width / scenario.medium.c


class _Builder:
    def __init__(self, scenario):
        self.c = scenario.controls
        self.t = 0.0
        self.segments: List[Segment] = []

    def add(self, duration: float, omega_start: float, omega_end: float, control: ControlSet, label: str):
        if duration <= TIME_TOL:
            raise ScenarioValidationError("타임라인 구간 길이가 0 이하입니다", {"label": label, "t": self.t})
        try:
            self.segments.append(Segment(
                self.t, self.t + duration, omega_start, omega_end, control,
                shape=self.c.ramp_shape, label=label,
            ))
        except StoredLightError as e:
            raise ScenarioValidationError(f"타임라인 구성 오류: {e.message}", e.details) from e
        self.t += duration

    def hold_until(self, t_end: float, control: ControlSet, label: str):
        self.add(t_end - self.t, self.c.omega, self.c.omega, control, label)

    def switch_off(self, control: ControlSet, label: str):
        self.add(self.c.ramp, self.c.omega, 0.0, control, label)
        self.add(self.c.gap, 0.0, 0.0, control, label)

    def switch_on(self, control: ControlSet, label: str):
        self.add(self.c.ramp, 0.0, self.c.omega, control, label)


def build_timeline(scenario) -> Timeline:
    """
    시나리오로부터 ControlSchedule, 단계 창(storage/stage1/stage2), 입력 소스를 만듭니다.

    Raises:
        ScenarioValidationError: 묶음이 시작 시점에 이미 시료 안에 있거나,
            두 번째 묶음이 제어장이 켜지기 전에 도착하는 등 타임라인이 성립하지 않는 경우
    """
    medium = scenario.medium
    controls = scenario.controls
    b = _Builder(scenario)
    delays: List[float] = []
    switch_offs: List[float] = []
    storage_sets = [e.control for e in scenario.storage]

    # [1] 첫 번째 묶음: 투명 진입 후 저장
    first = scenario.packets[0]
    delay = first.delay if first.delay is not None else 0.0
    if front_arrival(first, delay, medium) < -TIME_TOL:
        raise ScenarioValidationError(
            "첫 번째 파동묶음이 시작 시점에 이미 시료 안에 있습니다",
            {"center": first.center, "width": first.width, "delay": delay},
        )
    sw = scenario.storage[0].switch_off
    sw = back_arrival(first, delay, medium) if sw is None else sw
    delays.append(delay)
    switch_offs.append(sw)
    b.hold_until(sw, storage_sets[0], "storage")
    b.switch_off(storage_sets[0], "storage")

    # [2] 두 번째 묶음: 상보 구성으로 다시 켜고 진입시킨 뒤 저장
    if scenario.two_packets:
        second = scenario.packets[1]
        b.switch_on(storage_sets[1], "storage")
        ready = b.t
        delay = second.delay
        if delay is None:
            delay = ready - front_arrival(second, 0.0, medium)
        if front_arrival(second, delay, medium) < ready - TIME_TOL:
            raise ScenarioValidationError(
                "두 번째 파동묶음이 제어장이 다시 켜지기 전에 시료에 도착합니다",
                {"arrival": front_arrival(second, delay, medium), "controls_ready": ready},
            )
        sw = scenario.storage[1].switch_off
        sw = back_arrival(second, delay, medium) if sw is None else sw
        if sw <= ready:
            raise ScenarioValidationError("두 번째 저장 시각이 제어장 켜짐 이전입니다", {"switch_off": sw, "ready": ready})
        delays.append(delay)
        switch_offs.append(sw)
        b.hold_until(sw, storage_sets[1], "storage")
        b.switch_off(storage_sets[1], "storage")

    # [3] 2단계 방출
    hold = controls.stage_hold if controls.stage_hold is not None else auto_stage_hold(scenario)
    set1 = scenario.release.control
    set2 = scenario.release.stage2_set
    release_start = b.t
    b.switch_on(set1, "stage1")
    b.add(hold, controls.omega, controls.omega, set1, "stage1")
    b.switch_off(set1, "stage1")
    stage2_start = b.t
    b.switch_on(set2, "stage2")
    b.add(hold, controls.omega, controls.omega, set2, "stage2")

    schedule = ControlSchedule(tuple(b.segments), controls.ramp_shape)
    windows = [
        StageWindow("storage", 0.0, release_start),
        StageWindow("stage1", release_start, stage2_start),
        StageWindow("stage2", stage2_start, schedule.t_end),
    ]
    sources = [PacketSource(p.wave_packet(), d) for p, d in zip(scenario.packets, delays)]
    logger.debug(
        f"timeline: switch_offs={switch_offs}, delays={delays}, hold={hold:.3f}, "
        f"release_start={release_start:.3f}, end={schedule.t_end:.3f}"
    )
    return Timeline(
        schedule=schedule,
        windows=windows,
        sources=sources,
        t_end=schedule.t_end,
        snapshot_times={"release": release_start},
        storage_sets=storage_sets,
        release_sets=[set1, set2],
        switch_offs=switch_offs,
        delays=delays,
        stage_hold=hold,
        release_start=release_start,
    )
