"""
수치 검증 도우미: 균일 매질의 암흑 폴라리톤 초기 상태, 무게중심, 격자 세분화 연구
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from stored_light.core.controls import ControlSchedule, ControlSet
from stored_light.core.interference import WavePacket
from stored_light.core.polariton import PolaritonBasis, PolaritonField, from_polaritons, to_polaritons
from stored_light.simulation.engine import MediumSimulator
from stored_light.simulation.medium import FieldState, MediumParams

logger = logging.getLogger(__name__)


def uniform_medium(kappa: float, length: float, cells: int, c: float = 1.0) -> MediumParams:
    """격자 전체에 κ 가 켜진 매질 (CFL = 1)"""
    return MediumParams(kappa=kappa, c=c, sample_start=0.0, sample_length=length, z_min=0.0, z_max=length, cells=cells)


def steady_basis(params: MediumParams, control: ControlSet, omega: float) -> PolaritonBasis:
    return PolaritonBasis(control, math.atan2(params.kappa, omega), 0.0)


def dark_packet(params: MediumParams, basis: PolaritonBasis, packet: WavePacket) -> FieldState:
    """Ψ 만 packet 모양으로 채운 상태 (Z = B = s_a = 0)"""
    psi = packet.evaluate(params.z)
    zeros = np.zeros_like(psi)
    return from_polaritons(PolaritonField(psi, zeros, zeros.copy(), zeros.copy()), basis)


def evolve(state: FieldState, params: MediumParams, schedule: ControlSchedule, duration: float) -> FieldState:
    """소스 없이 duration 만큼 진행한 상태"""
    simulator = MediumSimulator(params, schedule, initial=state)
    simulator.run(state.t + duration)
    return simulator.state()


def centroid(z: np.ndarray, density: np.ndarray) -> float:
    total = float(np.sum(density))
    if total <= 0:
        return float("nan")
    return float(np.sum(z * density) / total)


def total_density(state: FieldState) -> np.ndarray:
    return np.sum(np.abs(state.as_array()) ** 2, axis=0)


def psi_profile(state: FieldState, basis: PolaritonBasis) -> np.ndarray:
    return to_polaritons(state, basis).psi


def restrict(fine: np.ndarray) -> np.ndarray:
    """세분 격자의 인접 셀 쌍 평균 (셀 중심 격자 기준)"""
    fine = np.asarray(fine)
    if fine.shape[0] % 2:
        raise ValueError("세분 격자 셀 수는 짝수여야 합니다")
    return 0.5 * (fine[0::2] + fine[1::2])


@dataclass
class RefinementStudy:
    cells: List[int]
    errors: List[float]

    @property
    def ratios(self) -> List[float]:
        return [a / b for a, b in zip(self.errors, self.errors[1:]) if b > 0]

    @property
    def observed_order(self) -> float:
        ratios = self.ratios
        return math.log2(ratios[-1]) if ratios else float("nan")


def refinement_study(
    solve: Callable[[int], np.ndarray],
    cells: Sequence[int],
    length: float,
) -> RefinementStudy:
    """
    격자를 두 배씩 세분하며 연속된 해 사이의 L2 차이를 구합니다.

    Args:
        solve: 셀 수 → 셀 중심 프로파일
        cells: 오름차순, 각 항이 앞 항의 두 배
        length: 격자 전체 길이 (L2 가중치용)
    """
    cells = list(cells)
    for a, b in zip(cells, cells[1:]):
        if b != 2 * a:
            raise ValueError("cells 는 두 배씩 증가해야 합니다")
    solutions = [np.asarray(solve(n)) for n in cells]
    errors = []
    for n, coarse, fine in zip(cells, solutions, solutions[1:]):
        dz = length / n
        errors.append(float(np.sqrt(np.sum(np.abs(restrict(fine) - coarse) ** 2) * dz)))
    study = RefinementStudy(cells[:-1], errors)
    logger.info(f"refinement errors={errors}, ratios={study.ratios}")
    return study
