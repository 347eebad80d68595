"""
저장/2단계 방출 시뮬레이션 엔진

MediumSimulator 가 분할 스텝을 반복하며 출력 경계의 플럭스, 노름, 혼합각을 기록하고
RunResult 로 묶어 돌려줍니다. 입력 파동묶음은 왼쪽 경계로 주입됩니다.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from stored_light.core.controls import ControlSchedule, angle_at
from stored_light.core.interference import WavePacket
from stored_light.exceptions import NumericFaultError, UnknownStageError
from stored_light.simulation.medium import (
    FieldState,
    LocalPropagator,
    MediumParams,
    check_cfl,
    excitation_norm,
    split_step,
)
from stored_light.simulation.notifier import ProgressReporter

logger = logging.getLogger(__name__)

FINITE_CHECK_EVERY = 256


@dataclass(frozen=True)
class PacketSource:
    """왼쪽 경계로 들어오는 파동묶음. t = delay 에서 중심이 packet.center 에 위치"""
    packet: WavePacket
    delay: float = 0.0
    amplitude: complex = 1.0

    def value(self, z, t: float, c: float):
        return self.amplitude * self.packet.evaluate(np.asarray(z) - c * (t - self.delay))


@dataclass(frozen=True)
class StageWindow:
    label: str
    t_start: float
    t_end: float


@dataclass
class RunResult:
    """
    한 번의 실행 결과.

    times 는 각 스텝의 끝 시각이며 flux/output/norm/theta/phi 는 같은 길이입니다.
    """
    times: np.ndarray
    flux: np.ndarray
    output: np.ndarray
    norm_trace: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    stage_windows: List[StageWindow]
    dt: float
    input_norm: float
    inflow_total: float
    outflow_total: float
    conservation_residual: float
    snapshots: Dict[str, FieldState] = field(default_factory=dict)
    final_state: Optional[FieldState] = None

    @property
    def flux_trace(self) -> np.ndarray:
        return self.flux

    def window(self, label: str) -> StageWindow:
        for w in self.stage_windows:
            if w.label == label:
                return w
        raise UnknownStageError(f"알 수 없는 단계 '{label}'", {"known": [w.label for w in self.stage_windows]})

    def _mask(self, label: str) -> np.ndarray:
        w = self.window(label)
        return (self.times > w.t_start) & (self.times <= w.t_end)

    def stage_output(self, label: str) -> np.ndarray:
        """단계 창 안의 출력 진폭 √c·u(z_out, t) (정규화 전)"""
        return self.output[self._mask(label)]

    @property
    def output_modes(self) -> Dict[str, np.ndarray]:
        """단계별 정규화된 시간 모드 (Σ|a|²dt = 1, 방출이 없으면 0 배열)"""
        modes = {}
        for w in self.stage_windows:
            raw = self.stage_output(w.label)
            energy = float(np.sum(np.abs(raw) ** 2) * self.dt)
            modes[w.label] = raw / math.sqrt(energy) if energy > 0 else np.zeros_like(raw)
        return modes

    def released_fractions(self) -> Dict[str, float]:
        return {w.label: released_fraction(self, w.label) for w in self.stage_windows}

    @property
    def final_norm(self) -> float:
        return float(self.norm_trace[-1]) if self.norm_trace.size else 0.0


def released_fraction(result: RunResult, stage_label: str) -> float:
    """∫ c|u(z_out, t)|² dt (단계 창) / 입력 노름"""
    mask = result._mask(stage_label)
    if result.input_norm <= 0:
        return 0.0
    return float(np.sum(result.flux[mask]) * result.dt / result.input_norm)


class MediumSimulator:
    """[Engine] 분할 스텝을 반복 실행하고 경계 플럭스와 보존량을 기록하는 솔버"""

    def __init__(
        self,
        params: MediumParams,
        schedule: ControlSchedule,
        sources: Sequence[PacketSource] = (),
        initial: Optional[FieldState] = None,
        t_start: Optional[float] = None,
        progress: Optional[ProgressReporter] = None,
    ):
        self.params = params
        self.schedule = schedule
        self.sources = list(sources)
        self.dt = params.dt
        self.nu = check_cfl(params, self.dt)
        self.z = params.z
        self.kappa_profile = params.kappa_profile()
        self.propagator = LocalPropagator(self.kappa_profile)
        self.progress = progress
        self.t0 = schedule.t_start if t_start is None else float(t_start)

        if initial is not None:
            self.x = initial.as_array()
            self.t0 = initial.t
        else:
            self.x = np.zeros((4, params.cells), dtype=complex)
            self._fill_vacuum()
        self.t = self.t0
        self.steps_done = 0
        self.inflow_total = 0.0
        self.outflow_total = 0.0
        self.initial_norm = self.norm()
        logger.info(
            f"Simulator ready: cells={params.cells}, dt={self.dt:.3e}, cfl={self.nu:.3f}, "
            f"sources={len(self.sources)}, initial_norm={self.initial_norm:.6f}"
        )

    # ------------------------------------------------------------ boundary
    def incoming(self, z, t: float):
        total = np.zeros(np.shape(z), dtype=complex)
        for src in self.sources:
            total = total + src.value(z, t, self.params.c)
        return total

    def _fill_vacuum(self):
        """시료 앞 진공 영역에 이미 들어와 있는 파동묶음 부분을 채웁니다."""
        if not self.sources:
            return
        lead = (self.kappa_profile == 0.0) & (self.z < self.params.sample_start)
        self.x[0, lead] = self.incoming(self.z[lead], self.t0)
        inside = ~lead
        missed = float(np.sum(np.abs(self.incoming(self.z[inside], self.t0)) ** 2) * self.params.dz)
        if missed > 1e-10:
            logger.warning(f"⚠️ 시작 시점에 시료 내부에 놓인 입력 성분이 무시됩니다 (norm={missed:.2e})")

    def _inflow_value(self, t_next: float) -> complex:
        if not self.sources:
            return 0j
        if abs(self.nu - 1.0) <= 1e-12:
            return complex(self.incoming(self.z[0], t_next))
        return complex(self.incoming(self.z[0] - self.params.dz, t_next - 0.5 * self.dt))

    # ------------------------------------------------------------ stepping
    def norm(self) -> float:
        return float(np.sum(np.abs(self.x) ** 2) * self.params.dz)

    def state(self) -> FieldState:
        return FieldState.from_array(self.x, self.t)

    def advance(self) -> complex:
        """한 스텝 진행하고 오른쪽 경계를 빠져나간 u 값을 반환합니다."""
        t_next = self.t0 + (self.steps_done + 1) * self.dt
        inflow = self._inflow_value(t_next)
        outgoing = split_step(self.x, self.t, self.dt, self.schedule, self.params, self.propagator, inflow)
        weight = self.nu * self.params.dz
        self.inflow_total += weight * abs(inflow) ** 2
        self.outflow_total += weight * abs(outgoing) ** 2
        self.steps_done += 1
        self.t = t_next
        if self.steps_done % FINITE_CHECK_EVERY == 0 and not np.all(np.isfinite(self.x)):
            raise NumericFaultError("상태 배열에 NaN/Inf 가 발생했습니다", {"t": self.t})
        return outgoing

    def run(
        self,
        t_end: Optional[float] = None,
        windows: Optional[Sequence[StageWindow]] = None,
        snapshot_times: Optional[Dict[str, float]] = None,
    ) -> RunResult:
        """
        t_end 까지 진행합니다.

        Args:
            t_end: 종료 시각 (기본값: 스케줄 끝)
            windows: 단계 창 목록 (기본값: 전체 구간 하나 "all")
            snapshot_times: {이름: 시각} 처음으로 그 시각에 도달한 스텝 직후 상태를 저장
        """
        t_end = self.schedule.t_end if t_end is None else min(float(t_end), self.schedule.t_end)
        n_steps = int(math.floor((t_end - self.t) / self.dt + 1e-9))
        windows = list(windows) if windows else [StageWindow("all", self.t, t_end)]
        pending = sorted((snapshot_times or {}).items(), key=lambda kv: kv[1])
        snapshots: Dict[str, FieldState] = {}
        kappa = self.params.kappa
        c = self.params.c

        times = np.empty(n_steps)
        output = np.empty(n_steps, dtype=complex)
        norms = np.empty(n_steps)
        theta = np.empty(n_steps)
        phi = np.empty(n_steps)
        residual = 0.0
        base = self.initial_norm - self.outflow_total + self.inflow_total

        while pending and pending[0][1] <= self.t + 0.5 * self.dt:
            snapshots[pending.pop(0)[0]] = self.state()

        logger.info(f"▶ run: {n_steps} steps, t = {self.t:.3f} → {t_end:.3f}")
        for k in range(n_steps):
            outgoing = self.advance()
            times[k] = self.t
            output[k] = math.sqrt(c) * outgoing
            norms[k] = self.norm()
            angles = angle_at(self.schedule, min(self.t, self.schedule.t_end), kappa)
            theta[k], phi[k] = angles.theta, angles.phi
            residual = max(residual, abs(norms[k] + self.outflow_total - self.inflow_total - base))

            while pending and pending[0][1] <= self.t + 0.5 * self.dt:
                snapshots[pending.pop(0)[0]] = self.state()
            if self.progress is not None and self.progress.due(self.steps_done):
                self.progress.report(self.t, norms[k], self.outflow_total, theta[k])

        if not np.all(np.isfinite(self.x)):
            raise NumericFaultError("상태 배열에 NaN/Inf 가 발생했습니다", {"t": self.t})

        input_norm = self.initial_norm + self.inflow_total
        rel_residual = residual / input_norm if input_norm > 0 else residual
        logger.info(
            f"✅ run done: outflow={self.outflow_total:.6f}, final_norm={self.norm():.6f}, "
            f"residual={rel_residual:.2e}, propagator cache hits={self.propagator.hits}"
        )
        return RunResult(
            times=times,
            flux=np.abs(output) ** 2,
            output=output,
            norm_trace=norms,
            theta=theta,
            phi=phi,
            stage_windows=windows,
            dt=self.dt,
            input_norm=input_norm,
            inflow_total=self.inflow_total,
            outflow_total=self.outflow_total,
            conservation_residual=rel_residual,
            snapshots=snapshots,
            final_state=self.state(),
        )


def run(scenario, packets: Optional[Sequence[int]] = None, progress_every: int = 0) -> RunResult:
    """
    시나리오 전체 타임라인(진입 → 저장 → 1단계 방출 → 2단계 방출)을 실행합니다.

    Args:
        scenario: 검증된 Scenario
        packets: 주입할 파동묶음 인덱스 (기본값: 전부). 선형성 덕분에 묶음별로 따로 돌릴 수 있습니다.
        progress_every: progress.log 기록 간격 (스텝 수, 0 이면 기록 안 함)
    """
    from stored_light.runner.timeline import build_timeline

    timeline = build_timeline(scenario)
    sources = timeline.sources if packets is None else [timeline.sources[i] for i in packets]
    tag = scenario.outputs.name if packets is None else f"{scenario.outputs.name}[{','.join(map(str, packets))}]"
    progress = ProgressReporter(tag, progress_every) if progress_every else None
    simulator = MediumSimulator(scenario.medium, timeline.schedule, sources, progress=progress)
    return simulator.run(timeline.t_end, timeline.windows, timeline.snapshot_times)
