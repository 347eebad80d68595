"""
폴라리톤 분해 및 해석적 수송 모듈

(u, s_c, s_d) 를 암흑 폴라리톤 Ψ, 포획 폴라리톤 Z, 밝은 성분 B 로 바꾸는
3x3 유니터리 변환과 그 역, 형태 보존 수송, 저장 영역 기저 변환을 제공합니다.
s_a 는 excited 로 그대로 전달되어 전체 4x4 변환이 유니터리가 됩니다.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from stored_light.core.controls import AngleState, AngleTrace, ControlSet, HALF_PI
from stored_light.exceptions import (
    ApplicabilityError,
    BasisMismatchError,
    GridMismatchError,
    InvalidParameterError,
)
from stored_light.simulation.medium import FieldState

logger = logging.getLogger(__name__)

THETA_TOL = 1e-12
PROPORTIONAL_TOL = 1e-12
STORAGE_DIFF = np.diag([1.0, -1.0])


@dataclass(frozen=True)
class PolaritonBasis:
    """Ψ, Z 를 정의하는 기저 파라미터 (ControlSet, θ, χ)"""
    control: ControlSet
    theta: float = HALF_PI
    chi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.theta) or not math.isfinite(self.chi):
            raise InvalidParameterError("기저 각도가 유한하지 않습니다", {"theta": self.theta, "chi": self.chi})
        object.__setattr__(self, "theta", float(min(max(self.theta, 0.0), HALF_PI)))

    @classmethod
    def from_angles(cls, state: AngleState) -> "PolaritonBasis":
        return cls(state.control_set, state.theta, state.chi)

    @classmethod
    def stored(cls, control: ControlSet, chi: float = 0.0) -> "PolaritonBasis":
        """제어장이 꺼진 저장 영역 (θ = π/2)"""
        return cls(control, HALF_PI, chi)

    @property
    def is_storage(self) -> bool:
        return abs(self.theta - HALF_PI) <= THETA_TOL

    def rows(self) -> np.ndarray:
        """행 (Ψ, Z, B), 열 (u, s_c, s_d) 인 3x3 유니터리 행렬"""
        ct, st = math.cos(self.theta), math.sin(self.theta)
        cp, sp = math.cos(self.control.phi), math.sin(self.control.phi)
        e2 = np.exp(1j * self.control.chi2)
        e3 = np.exp(1j * self.control.chi3)
        ex = np.exp(-1j * self.chi)
        return np.array([
            [ex * ct, -ex * st * cp * e2, -ex * st * sp * e3],
            [0.0, sp * e2, -cp * e3],
            [st, ct * cp * e2, ct * sp * e3],
        ], dtype=complex)


@dataclass
class PolaritonField:
    """격자 위의 Ψ, Z, 밝은 성분 B 와 들뜬 코히어런스 s_a"""
    psi: np.ndarray
    z_pol: np.ndarray
    bright: np.ndarray
    excited: Optional[np.ndarray] = None

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        self.z_pol = np.asarray(self.z_pol, dtype=complex)
        self.bright = np.asarray(self.bright, dtype=complex)
        self.excited = np.zeros_like(self.psi) if self.excited is None else np.asarray(self.excited, dtype=complex)
        shapes = {a.shape for a in (self.psi, self.z_pol, self.bright, self.excited)}
        if len(shapes) != 1:
            raise GridMismatchError("PolaritonField 배열 길이가 서로 다릅니다", {"shapes": sorted(shapes)})

    def density(self) -> np.ndarray:
        """셀별 |Ψ|² + |Z|² + |B|² + |s_a|²"""
        return (
            np.abs(self.psi) ** 2 + np.abs(self.z_pol) ** 2
            + np.abs(self.bright) ** 2 + np.abs(self.excited) ** 2
        )


def to_polaritons(state: FieldState, basis: PolaritonBasis) -> PolaritonField:
    """FieldState 를 (Ψ, Z, B) 로 변환합니다. s_a 는 excited 로 그대로 옮깁니다."""
    if not (state.u.shape == state.s_c.shape == state.s_d.shape == state.s_a.shape):
        raise GridMismatchError("FieldState 배열 길이가 서로 다릅니다")
    y = basis.rows() @ np.vstack([state.u, state.s_c, state.s_d])
    return PolaritonField(y[0], y[1], y[2], state.s_a.copy())


def from_polaritons(pol: PolaritonField, basis: PolaritonBasis, t: float = 0.0) -> FieldState:
    """to_polaritons 의 역변환"""
    x = basis.rows().conj().T @ np.vstack([pol.psi, pol.z_pol, pol.bright])
    return FieldState(u=x[0], s_a=pol.excited.copy(), s_c=x[1], s_d=x[2], t=t)


# ------------------------------------------------------------------ transport

def transport_shift(theta_trace: AngleTrace, c: float) -> float:
    """c∫cos²θ dt (사다리꼴 적분)"""
    times = np.asarray(theta_trace.times, dtype=float)
    if times.size < 2:
        return 0.0
    return float(c * trapezoid(np.cos(np.asarray(theta_trace.theta)) ** 2, x=times))


def _require_proportional(trace: AngleTrace):
    for name in ("phi", "chi2", "chi3"):
        values = np.asarray(getattr(trace, name), dtype=float)
        if values.size and np.ptp(values) > PROPORTIONAL_TOL:
            raise ApplicabilityError(
                "제어장이 비례하지 않는 구간에서는 해석적 수송을 쓸 수 없습니다",
                {"varying": name, "spread": float(np.ptp(values))},
            )


def shift_profile(profile: np.ndarray, shift: float, dz: float, method: str = "spectral") -> np.ndarray:
    """
    격자 프로파일을 +shift 만큼 이동합니다 (격자 밖으로 나간 부분은 버림).

    spectral 은 두 배 영역으로 0 을 채운 뒤 FFT 위상 회전, linear 는 선형 보간입니다.
    """
    profile = np.asarray(profile, dtype=complex)
    n = profile.shape[0]
    if shift == 0.0:
        return profile.copy()
    if method == "linear":
        grid = np.arange(n) * dz
        src = grid - shift
        return np.interp(src, grid, profile.real, left=0.0, right=0.0) + 1j * np.interp(
            src, grid, profile.imag, left=0.0, right=0.0
        )
    if method != "spectral":
        raise InvalidParameterError(f"알 수 없는 보간 방식 '{method}'")

    padded = np.concatenate([profile, np.zeros(n, dtype=complex)])
    k = 2.0 * math.pi * np.fft.fftfreq(2 * n, d=dz)
    moved = np.fft.ifft(np.fft.fft(padded) * np.exp(-1j * k * shift))
    return moved[:n]


def transport(
    psi0: np.ndarray,
    theta_trace: AngleTrace,
    c: float,
    dz: float,
    method: str = "spectral",
) -> np.ndarray:
    """
    비례 제어 구간에서의 형태 보존 수송: Ψ(z, t₁) = Ψ(z - c∫cos²θ dt', t₀).

    Raises:
        ApplicabilityError: φ 또는 χ₂, χ₃ 가 구간 안에서 변하는 경우
    """
    _require_proportional(theta_trace)
    shift = transport_shift(theta_trace, c)
    logger.debug(f"transport shift = {shift:.6f}")
    return shift_profile(psi0, shift, dz, method)


# ------------------------------------------------------------------ basis change

def transfer_matrix(basis0: PolaritonBasis, basis1: PolaritonBasis) -> np.ndarray:
    """
    저장 영역(θ = π/2)에서 (Ψ⁰, Z⁰) → (Ψ¹, Z¹) 로 가는 2x2 행렬.

    Z 부호 규약: 폴라리톤 행의 Z 는 R 의 두 번째 입력/출력과 부호가 반대입니다.
    따라서 원소별로 R 과 같지 않고 diag(1, -1)·R·diag(1, -1) 과 같습니다
    (두 기저의 χ 가 0 일 때). 확률 |R_ij|² 는 그대로입니다.
    """
    t1 = PolaritonBasis.stored(basis1.control, basis1.chi).rows()[:2, 1:]
    t0 = PolaritonBasis.stored(basis0.control, basis0.chi).rows()[:2, 1:]
    return t1 @ t0.conj().T


def basis_change(pol: PolaritonField, basis0: PolaritonBasis, basis1: PolaritonBasis) -> PolaritonField:
    """
    같은 θ 를 갖는 두 기저 사이에서 폴라리톤 장을 옮깁니다.

    저장 영역에서는 2x2 transfer_matrix 를 (Ψ, Z) 에 적용하고 B, s_a 는 그대로 둡니다.
    """
    if abs(basis0.theta - basis1.theta) > THETA_TOL:
        raise BasisMismatchError(
            "θ 가 다른 기저 사이의 변환은 정의되지 않습니다",
            {"theta0": basis0.theta, "theta1": basis1.theta},
        )
    if basis0.is_storage:
        g = transfer_matrix(basis0, basis1)
        psi = g[0, 0] * pol.psi + g[0, 1] * pol.z_pol
        z_pol = g[1, 0] * pol.psi + g[1, 1] * pol.z_pol
        return PolaritonField(psi, z_pol, pol.bright.copy(), pol.excited.copy())
    return to_polaritons(from_polaritons(pol, basis0), basis1)
