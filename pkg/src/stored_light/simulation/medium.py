"""
매질 내 신호장/코히어런스 모드 함수의 1차원 운동 방정식

스케일된 방정식:
    ∂t s_a = iκu + i(Ω₂ s_c + Ω₃ s_d)
    ∂t s_c = iΩ₂* s_a,  ∂t s_d = iΩ₃* s_a
    (∂t + c∂z) u = iκ s_a

국소 부분 dX/dt = iMX (X = (u, s_a, s_c, s_d), M 은 에르미트) 는 셀마다 정확한
유니터리 전파자로, 이류(advection)는 격자 이동으로 처리하는 Strang 분할을 사용합니다.
"""

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from stored_light.core.controls import ControlSchedule, rabi_at
from stored_light.exceptions import (
    ConfigurationError,
    GridMismatchError,
    InvalidParameterError,
    NumericFaultError,
)

logger = logging.getLogger(__name__)

CFL_TOL = 1e-12
COMPONENTS = ("u", "s_a", "s_c", "s_d")


@dataclass(frozen=True)
class MediumParams:
    """
    매질 및 격자 설정 (스케일 단위, 기본 길이 단위는 입력 파동묶음 폭).

    Args:
        kappa: 집단 결합 상수 κ (시료 내부), 외부는 0
        c: 진공 신호 속도
        sample_start, sample_length: κ 가 켜진 구간 [start, start + length]
        z_min, z_max: 진공 도입/출구를 포함한 전체 격자
        cells: 셀 개수
        cfl: c·dt/dz (1 이면 정확한 격자 이동)
        edge_width: 0 이면 날카로운 경계, 양수면 tanh 경계 폭
    """
    kappa: float = 20.0
    c: float = 1.0
    sample_start: float = 12.0
    sample_length: float = 8.0
    z_min: float = 0.0
    z_max: float = 21.0
    cells: int = 4096
    cfl: float = 1.0
    edge_width: float = 0.0

    def __post_init__(self):
        if not (self.kappa > 0) or not math.isfinite(self.kappa):
            raise InvalidParameterError("kappa 는 양수여야 합니다", {"kappa": self.kappa})
        if not (self.c > 0) or not math.isfinite(self.c):
            raise InvalidParameterError("c 는 양수여야 합니다", {"c": self.c})
        if self.cells < 2:
            raise ConfigurationError("격자 셀이 너무 적습니다", {"cells": self.cells})
        if not (self.z_max > self.z_min):
            raise ConfigurationError("z_max 는 z_min 보다 커야 합니다", {"z_min": self.z_min, "z_max": self.z_max})
        if not (0.0 < self.cfl <= 1.0 + CFL_TOL):
            raise ConfigurationError("CFL 수는 (0, 1] 범위여야 합니다", {"cfl": self.cfl})
        if self.sample_length < 0 or self.edge_width < 0:
            raise InvalidParameterError(
                "시료 길이와 경계 폭은 음수가 될 수 없습니다",
                {"sample_length": self.sample_length, "edge_width": self.edge_width},
            )

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / self.cells

    @property
    def dt(self) -> float:
        return self.cfl * self.dz / self.c

    @property
    def sample_end(self) -> float:
        return self.sample_start + self.sample_length

    @property
    def z(self) -> np.ndarray:
        """셀 중심 좌표"""
        return self.z_min + (np.arange(self.cells) + 0.5) * self.dz

    @property
    def z_out(self) -> float:
        return float(self.z[-1])

    def kappa_profile(self) -> np.ndarray:
        z = self.z
        if self.edge_width > 0:
            w = self.edge_width
            return 0.5 * self.kappa * (np.tanh((z - self.sample_start) / w) - np.tanh((z - self.sample_end) / w))
        inside = (z >= self.sample_start) & (z < self.sample_end)
        return np.where(inside, self.kappa, 0.0)


@dataclass
class FieldState:
    """격자 위의 u, s_a, s_c, s_d 와 현재 시각"""
    u: np.ndarray
    s_a: np.ndarray
    s_c: np.ndarray
    s_d: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, name), dtype=complex) for name in COMPONENTS]
        lengths = {a.shape for a in arrays}
        if len(lengths) != 1 or arrays[0].ndim != 1:
            raise GridMismatchError("FieldState 배열 길이가 서로 다릅니다", {"shapes": sorted(lengths)})
        for name, arr in zip(COMPONENTS, arrays):
            setattr(self, name, arr)

    @classmethod
    def zeros(cls, cells: int, t: float = 0.0) -> "FieldState":
        return cls(*(np.zeros(cells, dtype=complex) for _ in COMPONENTS), t=t)

    @classmethod
    def from_array(cls, x: np.ndarray, t: float = 0.0) -> "FieldState":
        x = np.array(x, dtype=complex, copy=True)
        return cls(x[0], x[1], x[2], x[3], t=t)

    def as_array(self) -> np.ndarray:
        return np.vstack([self.u, self.s_a, self.s_c, self.s_d])

    def copy(self) -> "FieldState":
        return FieldState.from_array(self.as_array(), self.t)

    @property
    def cells(self) -> int:
        return self.u.shape[0]

    def check_finite(self):
        if not np.all(np.isfinite(self.as_array())):
            raise NumericFaultError("상태 배열에 NaN/Inf 가 있습니다", {"t": self.t})


def excitation_norm(state: FieldState, dz: float) -> float:
    """∫(|u|² + |s_a|² + |s_c|² + |s_d|²) dz"""
    return float(np.sum(np.abs(state.as_array()) ** 2) * dz)


def scaled_rhs(state: FieldState, omega2: complex, omega3: complex, kappa_profile: np.ndarray) -> FieldState:
    """
    국소(셀별) 시간 도함수. 이류 항 -c∂z u 는 분할 스킴이 따로 처리합니다.
    """
    state.check_finite()
    kappa_profile = np.asarray(kappa_profile, dtype=float)
    if kappa_profile.shape != state.u.shape:
        raise GridMismatchError("kappa 프로파일과 상태 격자가 다릅니다")
    values = (complex(omega2), complex(omega3))
    if not all(math.isfinite(v.real) and math.isfinite(v.imag) for v in values):
        raise NumericFaultError("Rabi 진동수가 유한하지 않습니다", {"omega2": omega2, "omega3": omega3})
    o2, o3 = values
    return FieldState(
        u=1j * kappa_profile * state.s_a,
        s_a=1j * (kappa_profile * state.u + o2 * state.s_c + o3 * state.s_d),
        s_c=1j * np.conj(o2) * state.s_a,
        s_d=1j * np.conj(o3) * state.s_a,
        t=state.t,
    )


class LocalPropagator:
    """
    셀별 국소 전파자 exp(iMτ) 캐시.

    κ 값의 종류(보통 0 과 κ 두 가지)마다 np.linalg.eigh 로 한 번에 대각화하고,
    (Ω₂, Ω₃, τ) 를 키로 결과를 보관합니다.
    """

    def __init__(self, kappa_profile: np.ndarray, max_entries: int = 256):
        levels, index = np.unique(np.asarray(kappa_profile, dtype=float), return_inverse=True)
        self.levels = levels
        self.groups = [np.flatnonzero(index == i) for i in range(len(levels))]
        self.cells = index.shape[0]
        self.max_entries = max_entries
        self._cache: "OrderedDict[Tuple[complex, complex, float], np.ndarray]" = OrderedDict()
        self.hits = 0
        self.misses = 0

    def matrices(self, omega2: complex, omega3: complex, tau: float) -> np.ndarray:
        key = (complex(omega2), complex(omega3), float(tau))
        cached = self._cache.get(key)
        if cached is not None:
            self._cache.move_to_end(key)
            self.hits += 1
            return cached

        self.misses += 1
        n = len(self.levels)
        m = np.zeros((n, 4, 4), dtype=complex)
        m[:, 0, 1] = m[:, 1, 0] = self.levels
        m[:, 1, 2], m[:, 2, 1] = key[0], np.conj(key[0])
        m[:, 1, 3], m[:, 3, 1] = key[1], np.conj(key[1])
        eigvals, vecs = np.linalg.eigh(m)
        phases = np.exp(1j * eigvals * tau)
        props = np.einsum("lij,lj,lkj->lik", vecs, phases, vecs.conj())

        self._cache[key] = props
        if len(self._cache) > self.max_entries:
            self._cache.popitem(last=False)
        return props

    def apply(self, x: np.ndarray, omega2: complex, omega3: complex, tau: float) -> np.ndarray:
        """x (4, N) 를 제자리에서 갱신"""
        props = self.matrices(omega2, omega3, tau)
        for prop, cols in zip(props, self.groups):
            x[:, cols] = prop @ x[:, cols]
        return x


def split_step(
    x: np.ndarray,
    t: float,
    dt: float,
    schedule: ControlSchedule,
    params: MediumParams,
    propagator: LocalPropagator,
    inflow: complex = 0j,
) -> complex:
    """
    Strang 분할 한 스텝: 국소 반 스텝 → 이류 → 국소 반 스텝. x 를 제자리에서 갱신합니다.

    Args:
        inflow: 왼쪽 경계로 들어오는 u 값 (t + dt 시각, 첫 셀 중심 기준)

    Returns:
        오른쪽 경계를 빠져나간 u 값 (CFL = 1 이면 마지막 셀 값 그대로)
    """
    half = 0.5 * dt
    o2, o3 = rabi_at(schedule, t + 0.25 * dt)
    propagator.apply(x, o2, o3, half)

    u = x[0]
    outgoing = complex(u[-1])
    nu = params.c * dt / params.dz
    if abs(nu - 1.0) <= CFL_TOL:
        u[1:] = u[:-1].copy()
        u[0] = inflow
    else:
        # 1차 풍상 차분 (ν < 1)
        upstream = np.empty_like(u)
        upstream[1:] = u[:-1]
        upstream[0] = inflow
        u[:] = (1.0 - nu) * u + nu * upstream

    o2, o3 = rabi_at(schedule, t + 0.75 * dt)
    propagator.apply(x, o2, o3, half)
    return outgoing


def check_cfl(params: MediumParams, dt: float) -> float:
    cfl = params.c * dt / params.dz
    if cfl > 1.0 + CFL_TOL:
        raise ConfigurationError("CFL 조건 위반 (c·dt/dz > 1)", {"cfl": cfl})
    if not (dt > 0):
        raise ConfigurationError("dt 는 양수여야 합니다", {"dt": dt})
    return cfl


def step(
    state: FieldState,
    schedule: ControlSchedule,
    params: MediumParams,
    dt: float,
    inflow: complex = 0j,
    propagator: Optional[LocalPropagator] = None,
) -> FieldState:
    """한 시간 스텝 진행한 새 FieldState 를 반환합니다 (입력은 변경하지 않음)."""
    check_cfl(params, dt)
    if state.cells != params.cells:
        raise GridMismatchError("상태 격자와 매질 격자가 다릅니다", {"state": state.cells, "params": params.cells})
    state.check_finite()
    if propagator is None:
        propagator = LocalPropagator(params.kappa_profile())
    x = state.as_array()
    split_step(x, state.t, dt, schedule, params, propagator, inflow)
    return FieldState.from_array(x, state.t + dt)
