"""
시나리오 문서(JSON) 파싱/직렬화 및 검증

알 수 없는 키는 가장 가까운 유효 키와 함께 거부하고, 빠진 필수 키는 점 표기 경로로 보고합니다.
"""

import difflib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from stored_light.core.controls import ControlSet, RampShape, complementary
from stored_light.core.interference import SCAN_AXES, WavePacket
from stored_light.exceptions import (
    MissingKeyError,
    ScenarioSyntaxError,
    ScenarioValidationError,
    StoredLightError,
    UnknownKeyError,
)
from stored_light.simulation.medium import MediumParams

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
OUTPUT_FORMATS = ("csv", "json", "both")
COMPLEMENTARY_TOL = 1e-9

MEDIUM_KEYS = ("kappa", "c", "sample_start", "sample_length", "z_min", "z_max", "cells", "cfl", "edge_width")
CONTROLS_KEYS = ("omega", "ramp", "ramp_shape", "gap", "settle", "stage_hold")
SET_KEYS = ("phi", "chi2", "chi3")
STORAGE_KEYS = SET_KEYS + ("switch_off",)
RELEASE_KEYS = SET_KEYS + ("stage2",)
PACKET_KEYS = ("center", "width", "delay")
OUTPUTS_KEYS = ("dir", "name", "format", "ledger", "record_every")
SWEEP_KEYS = ("axis", "start", "stop", "points", "end_to_end", "delta1", "delta2", "separation")
NOTIFY_KEYS = ("webhook_url", "timeout")
TOP_KEYS = ("schema_version", "medium", "controls", "storage", "release", "packets", "outputs", "sweep", "notify")
REQUIRED_TOP = ("medium", "release", "packets")


@dataclass(frozen=True)
class ControlsConfig:
    omega: float = 20.0
    ramp: float = 1.0
    ramp_shape: RampShape = RampShape.COS2
    gap: float = 1.0
    settle: float = 1.0
    stage_hold: Optional[float] = None


@dataclass(frozen=True)
class StorageEvent:
    """한 파동묶음을 가두는 저장 구성과 제어장을 끄는 시각 (None 이면 자동)"""
    control: ControlSet
    switch_off: Optional[float] = None


@dataclass(frozen=True)
class ReleaseConfig:
    control: ControlSet
    stage2: Optional[ControlSet] = None

    @property
    def stage2_set(self) -> ControlSet:
        """2단계 구성: 지정이 없으면 1단계의 상보 구성"""
        return self.stage2 if self.stage2 is not None else complementary(self.control)

    @property
    def overridden(self) -> bool:
        return self.stage2 is not None


@dataclass(frozen=True)
class PacketConfig:
    center: float = 6.0
    width: float = 1.0
    delay: Optional[float] = None

    def wave_packet(self) -> WavePacket:
        return WavePacket.gaussian(self.center, self.width)


@dataclass(frozen=True)
class OutputsConfig:
    dir: str = "results"
    name: str = "scenario"
    format: str = "both"
    ledger: Optional[str] = None
    record_every: int = 1


@dataclass(frozen=True)
class SweepConfig:
    axis: str = "separation"
    start: float = 0.0
    stop: float = 5.0
    points: int = 51
    end_to_end: bool = False
    delta1: float = 1.0
    delta2: float = 1.0
    separation: float = 0.0

    def values(self) -> List[float]:
        if self.points == 1:
            return [self.start]
        step = (self.stop - self.start) / (self.points - 1)
        return [self.start + i * step for i in range(self.points)]


@dataclass(frozen=True)
class NotifyConfig:
    webhook_url: Optional[str] = None
    timeout: float = 5.0


@dataclass(frozen=True)
class Scenario:
    medium: MediumParams
    release: ReleaseConfig
    packets: Tuple[PacketConfig, ...]
    storage: Tuple[StorageEvent, ...] = (StorageEvent(ControlSet(0.0)),)
    controls: ControlsConfig = field(default_factory=ControlsConfig)
    outputs: OutputsConfig = field(default_factory=OutputsConfig)
    sweep: Optional[SweepConfig] = None
    notify: NotifyConfig = field(default_factory=NotifyConfig)
    schema_version: int = SCHEMA_VERSION

    @property
    def two_packets(self) -> bool:
        return len(self.packets) == 2


# ------------------------------------------------------------------ parsing helpers

def _check_keys(section: Dict, allowed: Sequence[str], path: str):
    for key in section:
        if key not in allowed:
            matches = difflib.get_close_matches(key, allowed, n=1, cutoff=0.0)
            raise UnknownKeyError(key, matches[0] if matches else None, section=path)


def _require(section: Dict, key: str, path: str):
    if key not in section:
        raise MissingKeyError(f"{path}.{key}" if path else key)
    return section[key]


def _section(doc: Dict, key: str, allowed: Sequence[str], path: Optional[str] = None) -> Dict:
    value = doc.get(key)
    path = path or key
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioValidationError(f"'{path}' 는 객체여야 합니다")
    _check_keys(value, allowed, path)
    return value


def _number(value: Any, path: str, optional: bool = False) -> Optional[float]:
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioValidationError(f"'{path}' 는 유한한 숫자여야 합니다", {"value": value})
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioValidationError(f"'{path}' 는 정수여야 합니다", {"value": value})
    return value


def _string(value: Any, path: str, optional: bool = False) -> Optional[str]:
    if value is None and optional:
        return None
    if not isinstance(value, str):
        raise ScenarioValidationError(f"'{path}' 는 문자열이어야 합니다", {"value": value})
    return value


def _positive(value: float, path: str, allow_zero: bool = False) -> float:
    if value < 0 or (value == 0 and not allow_zero):
        raise ScenarioValidationError(f"'{path}' 는 양수여야 합니다", {"value": value})
    return value


def _control_set(section: Dict, path: str, required: bool = True) -> ControlSet:
    if required:
        _require(section, "phi", path)
    values = {k: _number(section.get(k, 0.0), f"{path}.{k}") for k in SET_KEYS}
    if not 0.0 <= values["phi"] <= 0.5 * math.pi + 1e-12:
        raise ScenarioValidationError(f"'{path}.phi' 는 [0, π/2] 범위여야 합니다", {"value": values["phi"]})
    return ControlSet(**values)


def _list_section(doc: Dict, key: str, allowed: Sequence[str]) -> List[Dict]:
    value = doc.get(key)
    if value is None:
        return []
    items = value if isinstance(value, list) else [value]
    out = []
    for i, item in enumerate(items):
        path = f"{key}[{i}]"
        if not isinstance(item, dict):
            raise ScenarioValidationError(f"'{path}' 는 객체여야 합니다")
        _check_keys(item, allowed, path)
        out.append(item)
    return out


# ------------------------------------------------------------------ builders

def _build_medium(section: Dict) -> MediumParams:
    values = {}
    for key in MEDIUM_KEYS:
        if key not in section:
            continue
        if key == "cells":
            values[key] = _integer(section[key], "medium.cells")
        else:
            values[key] = _number(section[key], f"medium.{key}")
    try:
        params = MediumParams(**values)
    except StoredLightError as e:
        raise ScenarioValidationError(f"medium 설정 오류: {e.message}", e.details) from e
    if params.sample_start < params.z_min or params.sample_end > params.z_max:
        raise ScenarioValidationError(
            "시료 구간이 격자 밖으로 벗어납니다",
            {"sample": (params.sample_start, params.sample_end), "grid": (params.z_min, params.z_max)},
        )
    return params


def _build_controls(section: Dict) -> ControlsConfig:
    base = ControlsConfig()
    shape = _string(section.get("ramp_shape", base.ramp_shape.value), "controls.ramp_shape")
    try:
        ramp_shape = RampShape(shape)
    except ValueError:
        matches = difflib.get_close_matches(shape, [s.value for s in RampShape], n=1, cutoff=0.0)
        raise ScenarioValidationError(
            f"알 수 없는 램프 모양 '{shape}'", {"suggestion": matches[0] if matches else None}
        )
    hold = _number(section.get("stage_hold"), "controls.stage_hold", optional=True)
    return ControlsConfig(
        omega=_positive(_number(section.get("omega", base.omega), "controls.omega"), "controls.omega"),
        ramp=_positive(_number(section.get("ramp", base.ramp), "controls.ramp"), "controls.ramp"),
        ramp_shape=ramp_shape,
        gap=_positive(_number(section.get("gap", base.gap), "controls.gap"), "controls.gap"),
        settle=_positive(_number(section.get("settle", base.settle), "controls.settle"), "controls.settle", allow_zero=True),
        stage_hold=None if hold is None else _positive(hold, "controls.stage_hold"),
    )


def _build_packets(doc: Dict) -> Tuple[PacketConfig, ...]:
    items = _list_section(doc, "packets", PACKET_KEYS)
    if not items:
        raise MissingKeyError("packets[0]")
    if len(items) > 2:
        raise ScenarioValidationError("파동묶음은 최대 두 개까지 허용됩니다", {"packets": len(items)})
    packets = []
    for i, item in enumerate(items):
        path = f"packets[{i}]"
        center = _number(_require(item, "center", path), f"{path}.center")
        width = _number(_require(item, "width", path), f"{path}.width")
        _positive(width, f"{path}.width")
        delay = _number(item.get("delay"), f"{path}.delay", optional=True)
        packets.append(PacketConfig(center, width, delay))
    return tuple(packets)


def _build_storage(doc: Dict, n_packets: int) -> Tuple[StorageEvent, ...]:
    items = _list_section(doc, "storage", STORAGE_KEYS)
    events = []
    for i, item in enumerate(items):
        path = f"storage[{i}]"
        switch_off = _number(item.get("switch_off"), f"{path}.switch_off", optional=True)
        events.append(StorageEvent(_control_set(item, path, required=False), switch_off))
    if not events:
        events.append(StorageEvent(ControlSet(0.0)))
    if len(events) > n_packets:
        raise ScenarioValidationError(
            "저장 구성 수가 파동묶음 수보다 많습니다", {"storage": len(events), "packets": n_packets}
        )
    if n_packets == 2 and len(events) == 1:
        # 두 번째 입력 포트는 첫 저장 구성의 상보 구성
        events.append(StorageEvent(complementary(events[0].control)))
    return tuple(events)


def _build_release(doc: Dict) -> ReleaseConfig:
    section = _section(doc, "release", RELEASE_KEYS)
    control = _control_set(section, "release")
    stage2 = section.get("stage2")
    if stage2 is None:
        return ReleaseConfig(control)
    if not isinstance(stage2, dict):
        raise ScenarioValidationError("'release.stage2' 는 객체여야 합니다")
    _check_keys(stage2, SET_KEYS, "release.stage2")
    return ReleaseConfig(control, _control_set(stage2, "release.stage2"))


def _build_outputs(section: Dict) -> OutputsConfig:
    base = OutputsConfig()
    fmt = _string(section.get("format", base.format), "outputs.format")
    if fmt not in OUTPUT_FORMATS:
        raise ScenarioValidationError(f"알 수 없는 출력 형식 '{fmt}'", {"allowed": OUTPUT_FORMATS})
    record_every = _integer(section.get("record_every", base.record_every), "outputs.record_every")
    if record_every < 1:
        raise ScenarioValidationError("'outputs.record_every' 는 1 이상이어야 합니다")
    return OutputsConfig(
        dir=_string(section.get("dir", base.dir), "outputs.dir"),
        name=_string(section.get("name", base.name), "outputs.name"),
        format=fmt,
        ledger=_string(section.get("ledger"), "outputs.ledger", optional=True),
        record_every=record_every,
    )


def _build_sweep(doc: Dict) -> Optional[SweepConfig]:
    if doc.get("sweep") is None:
        return None
    section = _section(doc, "sweep", SWEEP_KEYS)
    base = SweepConfig()
    axis = _string(section.get("axis", base.axis), "sweep.axis")
    if axis not in SCAN_AXES:
        raise ScenarioValidationError(f"알 수 없는 스윕 축 '{axis}'", {"allowed": SCAN_AXES})
    points = _integer(section.get("points", base.points), "sweep.points")
    if points < 1:
        raise ScenarioValidationError("스윕 범위가 비어 있습니다", {"points": points})
    end_to_end = section.get("end_to_end", base.end_to_end)
    if not isinstance(end_to_end, bool):
        raise ScenarioValidationError("'sweep.end_to_end' 는 true/false 여야 합니다")
    sweep = SweepConfig(
        axis=axis,
        start=_number(section.get("start", base.start), "sweep.start"),
        stop=_number(section.get("stop", base.stop), "sweep.stop"),
        points=points,
        end_to_end=end_to_end,
        delta1=_positive(_number(section.get("delta1", base.delta1), "sweep.delta1"), "sweep.delta1"),
        delta2=_positive(_number(section.get("delta2", base.delta2), "sweep.delta2"), "sweep.delta2"),
        separation=_number(section.get("separation", base.separation), "sweep.separation"),
    )
    if sweep.end_to_end and sweep.axis != "separation":
        raise ScenarioValidationError("종단 간(end_to_end) 스윕은 separation 축만 지원합니다")
    return sweep


def _build_notify(section: Dict) -> NotifyConfig:
    base = NotifyConfig()
    return NotifyConfig(
        webhook_url=_string(section.get("webhook_url"), "notify.webhook_url", optional=True),
        timeout=_positive(_number(section.get("timeout", base.timeout), "notify.timeout"), "notify.timeout"),
    )


# ------------------------------------------------------------------ public API

def parse_scenario(text: str) -> Scenario:
    """
    JSON 시나리오 문서를 Scenario 로 변환합니다 (기본값 적용, 엄격한 키 검사).

    Raises:
        ScenarioSyntaxError: JSON 문법 오류 (줄/열 포함)
        UnknownKeyError, MissingKeyError, ScenarioValidationError
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioSyntaxError(f"JSON 문법 오류: {e.msg}", e.lineno, e.colno) from e
    if not isinstance(doc, dict):
        raise ScenarioSyntaxError("최상위 값은 객체여야 합니다", 1, 1)

    _check_keys(doc, TOP_KEYS, "")
    for key in REQUIRED_TOP:
        _require(doc, key, "")

    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioValidationError("지원하지 않는 schema_version", {"schema_version": version})

    packets = _build_packets(doc)
    scenario = Scenario(
        medium=_build_medium(_section(doc, "medium", MEDIUM_KEYS)),
        release=_build_release(doc),
        packets=packets,
        storage=_build_storage(doc, len(packets)),
        controls=_build_controls(_section(doc, "controls", CONTROLS_KEYS)),
        outputs=_build_outputs(_section(doc, "outputs", OUTPUTS_KEYS)),
        sweep=_build_sweep(doc),
        notify=_build_notify(_section(doc, "notify", NOTIFY_KEYS)),
    )
    check(scenario)
    return scenario


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        return parse_scenario(f.read())


def check(scenario: Scenario):
    """필드 간 검증: 두 입력 포트의 상보성, 타임라인 구성 가능 여부"""
    if scenario.two_packets:
        first, second = (e.control for e in scenario.storage)
        if not complementary(first).equivalent(second, COMPLEMENTARY_TOL):
            raise ScenarioValidationError(
                "두 파동묶음의 저장 구성은 서로 상보적이어야 합니다 (φ' = π/2 − φ, χ₂' = χ₂ + π, χ₃' = χ₃)",
                {"storage0": first.to_dict(), "storage1": second.to_dict()},
            )
    from stored_light.runner.timeline import build_timeline

    build_timeline(scenario)


def _set_dict(control: ControlSet) -> Dict:
    return {"phi": control.phi, "chi2": control.chi2, "chi3": control.chi3}


def scenario_to_dict(scenario: Scenario) -> Dict:
    m = scenario.medium
    c = scenario.controls
    doc = {
        "schema_version": scenario.schema_version,
        "medium": {key: getattr(m, key) for key in MEDIUM_KEYS},
        "controls": {
            "omega": c.omega, "ramp": c.ramp, "ramp_shape": c.ramp_shape.value,
            "gap": c.gap, "settle": c.settle, "stage_hold": c.stage_hold,
        },
        "storage": [dict(_set_dict(e.control), switch_off=e.switch_off) for e in scenario.storage],
        "release": dict(
            _set_dict(scenario.release.control),
            stage2=None if scenario.release.stage2 is None else _set_dict(scenario.release.stage2),
        ),
        "packets": [{"center": p.center, "width": p.width, "delay": p.delay} for p in scenario.packets],
        "outputs": {
            "dir": scenario.outputs.dir, "name": scenario.outputs.name, "format": scenario.outputs.format,
            "ledger": scenario.outputs.ledger, "record_every": scenario.outputs.record_every,
        },
        "sweep": None if scenario.sweep is None else {key: getattr(scenario.sweep, key) for key in SWEEP_KEYS},
        "notify": {"webhook_url": scenario.notify.webhook_url, "timeout": scenario.notify.timeout},
    }
    return doc


def dump_scenario(scenario: Scenario) -> str:
    """정규 형식 문서. parse_scenario(dump_scenario(s)) == s"""
    return json.dumps(scenario_to_dict(scenario), indent=2, ensure_ascii=False) + "\n"


def with_second_switch_off(scenario: Scenario, switch_off: float) -> Scenario:
    """두 번째 묶음의 저장 시각만 바꾼 시나리오 (분리 거리 스윕용)"""
    storage = list(scenario.storage)
    storage[1] = replace(storage[1], switch_off=switch_off)
    return replace(scenario, storage=tuple(storage))
