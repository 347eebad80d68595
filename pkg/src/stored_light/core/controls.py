"""
제어장(control field) 스케줄 및 혼합각(mixing angle) 계산 모듈

두 제어장의 Rabi 진동수 Ω₂(t), Ω₃(t) 를 구간별 포락선으로 표현하고,
폴라리톤 기저를 결정하는 θ, φ, χ₂, χ₃, χ 를 유도합니다.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from stored_light.exceptions import (
    InvalidParameterError,
    InvalidTraceError,
    OutOfRangeError,
)

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi
BOUNDARY_TOL = 1e-12


def _wrap(angle: float) -> float:
    """[0, 2π) 로 축약"""
    return float(np.mod(angle, TWO_PI))


def _angle_close(a: float, b: float, tol: float) -> bool:
    diff = math.remainder(a - b, TWO_PI)
    return abs(diff) <= tol


class RampShape(str, Enum):
    """스위칭 프로파일"""
    COS2 = "cos2"
    SQUARE = "square"


@dataclass(frozen=True)
class ControlSet:
    """한 단계(저장/방출)에서 사용하는 제어장 쌍의 구성 (φ, χ₂, χ₃)"""
    phi: float
    chi2: float = 0.0
    chi3: float = 0.0

    def __post_init__(self):
        for name in ("phi", "chi2", "chi3"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidParameterError(f"ControlSet.{name} 값이 유한하지 않습니다", {name: value})
        # φ 는 [0, π/2] 로 고정
        object.__setattr__(self, "phi", float(min(max(self.phi, 0.0), HALF_PI)))
        object.__setattr__(self, "chi2", float(self.chi2))
        object.__setattr__(self, "chi3", float(self.chi3))

    def equivalent(self, other: "ControlSet", tol: float = 1e-12) -> bool:
        """위상을 2π 주기로 비교합니다."""
        return (
            abs(self.phi - other.phi) <= tol
            and _angle_close(self.chi2, other.chi2, tol)
            and _angle_close(self.chi3, other.chi3, tol)
        )

    def amplitudes(self, omega: float) -> Tuple[complex, complex]:
        """총 세기 Ω 로부터 (Ω₂, Ω₃) 복소 진폭을 만듭니다."""
        return (
            omega * math.cos(self.phi) * complex(math.cos(self.chi2), math.sin(self.chi2)),
            omega * math.sin(self.phi) * complex(math.cos(self.chi3), math.sin(self.chi3)),
        )

    def to_dict(self) -> dict:
        return {"phi": self.phi, "chi2": self.chi2, "chi3": self.chi3}


@dataclass(frozen=True)
class AngleState:
    """특정 시각의 혼합각 묶음"""
    theta: float
    phi: float
    chi2: float
    chi3: float
    chi: float = 0.0
    omega: float = 0.0

    @property
    def control_set(self) -> ControlSet:
        return ControlSet(self.phi, self.chi2, self.chi3)


@dataclass(frozen=True)
class Segment:
    """
    하나의 시간 구간 [t_start, t_end) 과 그 안의 포락선.

    Args:
        t_start, t_end: 구간 경계
        omega_start, omega_end: 총 Rabi 세기 Ω 의 시작/끝 값 (램프)
        control: 구간 시작의 ControlSet
        target: φ/χ 를 회전시키는 경우 도착 ControlSet (None 이면 고정)
        shape: 램프 모양
        chirp: χ₂, χ₃ 에 공통으로 더해지는 위상 변화율 (χ̇₂ = χ̇₃)
        label: 스테이지 이름
    """
    t_start: float
    t_end: float
    omega_start: float
    omega_end: float
    control: ControlSet
    target: Optional[ControlSet] = None
    shape: RampShape = RampShape.COS2
    chirp: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)) or self.t_end <= self.t_start:
            raise InvalidParameterError(
                "구간 길이가 0 이하입니다", {"t_start": self.t_start, "t_end": self.t_end}
            )
        if self.omega_start < 0 or self.omega_end < 0:
            raise InvalidParameterError(
                "Rabi 세기는 음수가 될 수 없습니다", {"omega_start": self.omega_start, "omega_end": self.omega_end}
            )

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def proportional(self) -> bool:
        """Ω₃/Ω₂ 가 크기와 위상 모두 일정한지 여부"""
        return self.target is None or self.target.equivalent(self.control)

    @property
    def stationary_phase(self) -> bool:
        return self.chirp == 0.0

    def weight(self, t: float) -> float:
        """램프 진행도 w ∈ [0, 1]. 사각 램프는 구간 시작에서 곧바로 1."""
        if self.shape == RampShape.SQUARE:
            return 1.0
        x = min(max((t - self.t_start) / self.duration, 0.0), 1.0)
        return math.sin(HALF_PI * x) ** 2

    def envelope(self, t: float) -> float:
        w = self.weight(t)
        return self.omega_start + (self.omega_end - self.omega_start) * w

    def control_at(self, t: float) -> ControlSet:
        base = self.control
        if self.target is not None:
            w = self.weight(t)
            base = ControlSet(
                base.phi + (self.target.phi - base.phi) * w,
                base.chi2 + (self.target.chi2 - base.chi2) * w,
                base.chi3 + (self.target.chi3 - base.chi3) * w,
            )
        if self.chirp:
            shift = self.chirp * (t - self.t_start)
            base = ControlSet(base.phi, base.chi2 + shift, base.chi3 + shift)
        return base

    def rabi(self, t: float) -> Tuple[complex, complex]:
        return self.control_at(t).amplitudes(self.envelope(t))


@dataclass(frozen=True)
class ControlSchedule:
    """연속적이고 겹치지 않는 Segment 들의 순서열"""
    segments: Tuple[Segment, ...]
    ramp_shape: RampShape = RampShape.COS2
    _starts: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise InvalidParameterError("스케줄에 구간이 하나도 없습니다")
        for prev, nxt in zip(segments, segments[1:]):
            if abs(nxt.t_start - prev.t_end) > BOUNDARY_TOL * max(1.0, abs(prev.t_end)):
                raise InvalidParameterError(
                    "구간이 연속적이지 않습니다",
                    {"prev_end": prev.t_end, "next_start": nxt.t_start, "label": nxt.label},
                )
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "_starts", tuple(s.t_start for s in segments))

    @property
    def t_start(self) -> float:
        return self.segments[0].t_start

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end

    def segment_at(self, t: float) -> Segment:
        """t 가 속한 구간 (경계에서는 뒤 구간, 마지막 끝점은 마지막 구간)"""
        if not math.isfinite(t) or t < self.t_start or t > self.t_end:
            raise OutOfRangeError("스케줄 범위를 벗어난 시각입니다", {"t": t, "span": (self.t_start, self.t_end)})
        idx = bisect.bisect_right(self._starts, t) - 1
        return self.segments[max(idx, 0)]

    def segments_between(self, t0: float, t1: float) -> List[Segment]:
        return [s for s in self.segments if s.t_end > t0 and s.t_start < t1]

    def is_proportional(self, t0: float, t1: float) -> bool:
        """[t0, t1] 동안 φ̇ = 0 이고 χ̇₂ = χ̇₃ = 0 인지 판정합니다."""
        segs = self.segments_between(t0, t1)
        if not segs:
            return True
        first = segs[0].control
        return all(
            s.proportional and s.stationary_phase and s.control.equivalent(first)
            for s in segs
        )

    def window(self, label: str) -> Tuple[float, float]:
        """같은 라벨을 가진 구간들이 차지하는 시간 범위"""
        matched = [s for s in self.segments if s.label == label]
        if not matched:
            raise OutOfRangeError(f"라벨 '{label}' 구간이 없습니다")
        return matched[0].t_start, matched[-1].t_end

    def shifted(self, offset: float) -> "ControlSchedule":
        return ControlSchedule(
            tuple(replace(s, t_start=s.t_start + offset, t_end=s.t_end + offset) for s in self.segments),
            self.ramp_shape,
        )

    @classmethod
    def constant(cls, control: ControlSet, omega: float, t_start: float, t_end: float, label: str = "hold") -> "ControlSchedule":
        return cls((Segment(t_start, t_end, omega, omega, control, label=label),))


@dataclass(frozen=True)
class AngleTrace:
    """시간 샘플된 AngleState 배열"""
    times: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    chi2: np.ndarray
    chi3: np.ndarray
    chi: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.times)
        for name in ("theta", "phi", "chi2", "chi3"):
            if len(getattr(self, name)) != n:
                raise InvalidTraceError(f"AngleTrace.{name} 길이가 times 와 다릅니다", {"expected": n})

    def __len__(self):
        return len(self.times)

    def window(self, t0: float, t1: float) -> "AngleTrace":
        mask = (self.times >= t0) & (self.times <= t1)
        return AngleTrace(
            self.times[mask], self.theta[mask], self.phi[mask], self.chi2[mask], self.chi3[mask],
            None if self.chi is None else self.chi[mask],
        )


# ------------------------------------------------------------------ operations

def rabi_at(schedule: ControlSchedule, t: float) -> Tuple[complex, complex]:
    """t 에서의 (Ω₂, Ω₃) 복소 Rabi 진동수"""
    return schedule.segment_at(t).rabi(t)


def mixing_angles(
    omega2: complex,
    omega3: complex,
    kappa: float,
    previous: Optional[AngleState] = None,
) -> AngleState:
    """
    Rabi 진동수로부터 θ, φ, χ₂, χ₃ 를 계산합니다.

    Args:
        omega2, omega3: 복소 Rabi 진동수
        kappa: 집단 결합 상수 (> 0)
        previous: 제어장이 꺼졌을 때 φ/χ 를 이어받을 직전 상태

    Returns:
        AngleState (chi 는 previous 에서 이어받음)
    """
    if not (kappa > 0) or not math.isfinite(kappa):
        raise InvalidParameterError("kappa 는 양수여야 합니다", {"kappa": kappa})
    omega2 = complex(omega2)
    omega3 = complex(omega3)
    if not all(map(math.isfinite, (omega2.real, omega2.imag, omega3.real, omega3.imag))):
        raise InvalidParameterError("Rabi 진동수가 유한하지 않습니다", {"omega2": omega2, "omega3": omega3})

    a2, a3 = abs(omega2), abs(omega3)
    omega = math.hypot(a2, a3)
    prev_phi = previous.phi if previous else 0.0
    prev_chi2 = previous.chi2 if previous else 0.0
    prev_chi3 = previous.chi3 if previous else 0.0
    chi = previous.chi if previous else 0.0

    if omega == 0.0:
        return AngleState(HALF_PI, prev_phi, prev_chi2, prev_chi3, chi, 0.0)

    theta = math.atan2(kappa, omega)
    phi = math.atan2(a3, a2)
    chi2 = math.atan2(omega2.imag, omega2.real) if a2 > 0 else prev_chi2
    chi3 = math.atan2(omega3.imag, omega3.real) if a3 > 0 else prev_chi3
    return AngleState(theta, phi, chi2, chi3, chi, omega)


def angle_at(schedule: ControlSchedule, t: float, kappa: float) -> AngleState:
    """
    스케줄에서 직접 혼합각을 얻습니다. φ/χ 는 구간의 ControlSet 에서 가져오므로
    제어장이 꺼진 저장 구간에서도 기저가 유지됩니다.
    """
    if not (kappa > 0):
        raise InvalidParameterError("kappa 는 양수여야 합니다", {"kappa": kappa})
    seg = schedule.segment_at(t)
    omega = seg.envelope(t)
    cs = seg.control_at(t)
    theta = HALF_PI if omega == 0.0 else math.atan2(kappa, omega)
    return AngleState(theta, cs.phi, cs.chi2, cs.chi3, 0.0, omega)


def _chi_increments(theta: np.ndarray, chi2: np.ndarray) -> np.ndarray:
    weight = np.sin(theta) ** 2
    return 0.5 * (weight[:-1] + weight[1:]) * np.diff(np.unwrap(chi2))


def angle_trace(schedule: ControlSchedule, times: Sequence[float], kappa: float) -> AngleTrace:
    """times 에서 샘플한 AngleTrace. chi 는 chi_integrate 와 같은 사다리꼴 적분으로 누적"""
    times = np.asarray(times, dtype=float)
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise InvalidTraceError("시간 샘플이 단조 증가하지 않습니다")
    states = [angle_at(schedule, float(t), kappa) for t in times]
    theta = np.array([s.theta for s in states])
    phi = np.array([s.phi for s in states])
    chi2 = np.array([s.chi2 for s in states])
    chi3 = np.array([s.chi3 for s in states])
    chi = np.zeros_like(theta)
    if times.size > 1:
        chi[1:] = np.cumsum(_chi_increments(theta, chi2))
    return AngleTrace(times, theta, phi, chi2, chi3, chi)


def chi_integrate(trace: AngleTrace) -> float:
    """
    χ̇ = sin²θ · χ̇₂ 를 사다리꼴 공식으로 적분합니다.

    χ₂ 는 np.unwrap 으로 펼친 뒤 차분하므로 2π 경계를 넘어도 누적이 끊기지 않습니다.
    """
    times = np.asarray(trace.times, dtype=float)
    if times.size < 2:
        return 0.0
    if np.any(~np.isfinite(times)) or np.any(np.diff(times) <= 0):
        raise InvalidTraceError("시간 샘플이 단조 증가하지 않습니다", {"samples": int(times.size)})
    return float(np.sum(_chi_increments(np.asarray(trace.theta), np.asarray(trace.chi2))))


def complementary(control: ControlSet) -> ControlSet:
    """상보 제어 구성: (π/2 − φ, χ₂ + π mod 2π, χ₃)"""
    return ControlSet(HALF_PI - control.phi, _wrap(control.chi2 + math.pi), control.chi3)
