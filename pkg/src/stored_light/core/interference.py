"""
두 광자 간섭(Hong-Ou-Mandel) 해석 모듈

저장된 두 파동묶음의 겹침 s, 시간 영역 빔 스플리터 행렬 R,
방출 단계별 동시 방출(coalescence) 확률과 Fock 공간 검증 오라클을 제공합니다.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import simpson

from stored_light.core.controls import ControlSet, HALF_PI
from stored_light.exceptions import (
    GridMismatchError,
    InvalidParameterError,
    UnnormalizedPacketError,
)

logger = logging.getLogger(__name__)

NORM_TOL = 1e-8
UNITARY_TOL = 1e-12
SINGLE_MODE_TOL = 1e-14
STAGES = ("stage1", "stage2")


def _integrate(values: np.ndarray, z: np.ndarray) -> complex:
    """복소 피적분 함수의 합성 Simpson 적분"""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return complex(simpson(values.real, x=z), simpson(values.imag, x=z))
    return complex(simpson(values, x=z))


@dataclass(frozen=True, eq=False)
class WavePacket:
    """
    정규화된 파동묶음. 해석적 가우시안(center, width) 또는 격자 샘플(z, values).

    가우시안은 f(z) = (2πδ²)^(-1/4) exp(-(z-z₀)²/(4δ²)) 로, δ 는 |f|² 의 표준편차입니다.
    """
    center: float = 0.0
    width: float = 1.0
    z: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.z is None:
            if not (self.width > 0) or not math.isfinite(self.width):
                raise InvalidParameterError("파동묶음 폭은 양수여야 합니다", {"width": self.width})
            return
        z = np.asarray(self.z, dtype=float)
        values = np.asarray(self.values, dtype=complex)
        if z.shape != values.shape or z.ndim != 1:
            raise GridMismatchError("z 와 values 의 길이가 다릅니다", {"z": z.shape, "values": values.shape})
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "values", values)

    @classmethod
    def gaussian(cls, center: float, width: float) -> "WavePacket":
        return cls(center=center, width=width)

    @classmethod
    def sampled(cls, z: np.ndarray, values: np.ndarray, normalize: bool = False) -> "WavePacket":
        packet = cls(z=z, values=values)
        if normalize:
            n = packet.norm()
            if n <= 0:
                raise UnnormalizedPacketError("노름이 0 인 파동묶음은 정규화할 수 없습니다")
            packet = cls(z=packet.z, values=packet.values / math.sqrt(n))
        return packet

    @property
    def is_gaussian(self) -> bool:
        return self.z is None

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if self.is_gaussian:
            pref = (2.0 * math.pi * self.width ** 2) ** -0.25
            return (pref * np.exp(-((z - self.center) ** 2) / (4.0 * self.width ** 2))).astype(complex)
        return np.interp(z, self.z, self.values.real, left=0.0, right=0.0) + 1j * np.interp(
            z, self.z, self.values.imag, left=0.0, right=0.0
        )

    def norm(self) -> float:
        if self.is_gaussian:
            return 1.0
        return float(_integrate(np.abs(self.values) ** 2, self.z).real)

    def require_normalized(self, tol: float = NORM_TOL):
        n = self.norm()
        if abs(n - 1.0) > tol:
            raise UnnormalizedPacketError("파동묶음이 정규화되어 있지 않습니다", {"norm": n})


@dataclass(frozen=True, eq=False)
class BeamSplitterMatrix:
    """출력 포트(방출 단계) = R · 입력 포트(저장 채널)"""
    r: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=complex)
        if r.shape != (2, 2):
            raise InvalidParameterError("빔 스플리터 행렬은 2x2 여야 합니다", {"shape": r.shape})
        object.__setattr__(self, "r", r)

    @property
    def r31(self) -> complex:
        return complex(self.r[0, 0])

    @property
    def r32(self) -> complex:
        return complex(self.r[0, 1])

    @property
    def r41(self) -> complex:
        return complex(self.r[1, 0])

    @property
    def r42(self) -> complex:
        return complex(self.r[1, 1])

    def unitarity_error(self) -> float:
        return float(np.max(np.abs(self.r.conj().T @ self.r - np.eye(2))))

    @property
    def is_unitary(self) -> bool:
        return self.unitarity_error() < UNITARY_TOL

    def to_rows(self) -> list:
        return [[[v.real, v.imag] for v in row] for row in self.r.tolist()]


@dataclass(frozen=True)
class TwoPhotonStats:
    """두 광자 방출 통계"""
    s: complex
    amp_coal1: Optional[complex]
    p_coal1: float
    p_coal2: float
    p_noncoal: float

    @property
    def closure_error(self) -> float:
        return abs(self.p_coal1 + self.p_coal2 + self.p_noncoal - 1.0)

    def to_dict(self) -> Dict:
        amp = None if self.amp_coal1 is None else [self.amp_coal1.real, self.amp_coal1.imag]
        return {
            "s": [complex(self.s).real, complex(self.s).imag],
            "abs_s": abs(self.s),
            "amp_coal1": amp,
            "p_coal1": self.p_coal1,
            "p_coal2": self.p_coal2,
            "p_noncoal": self.p_noncoal,
        }


# ------------------------------------------------------------------ overlap

def gaussian_overlap(a: float, delta1: float, delta2: float) -> float:
    """중심 간 거리 a, 폭 δ₁, δ₂ 인 두 가우시안의 겹침 (실수)"""
    if delta1 <= 0 or delta2 <= 0:
        raise InvalidParameterError("가우시안 폭은 양수여야 합니다", {"delta1": delta1, "delta2": delta2})
    total = delta1 ** 2 + delta2 ** 2
    return math.sqrt(2.0 * delta1 * delta2 / total) * math.exp(-(a ** 2) / (4.0 * total))


def overlap(f1: WavePacket, f2: WavePacket) -> complex:
    """s = ∫ f₁*(z) f₂(z) dz"""
    f1.require_normalized()
    f2.require_normalized()
    if f1.is_gaussian and f2.is_gaussian:
        return complex(gaussian_overlap(f2.center - f1.center, f1.width, f2.width))

    if f1.is_gaussian:
        z, v1, v2 = f2.z, f1.evaluate(f2.z), f2.values
    elif f2.is_gaussian:
        z, v1, v2 = f1.z, f1.values, f2.evaluate(f1.z)
    else:
        if f1.z.shape != f2.z.shape or not np.allclose(f1.z, f2.z, rtol=0.0, atol=1e-12):
            raise GridMismatchError("두 파동묶음의 격자가 다릅니다")
        z, v1, v2 = f1.z, f1.values, f2.values
    return _integrate(np.conj(v1) * v2, z)


# ------------------------------------------------------------------ beam splitter

def bs_matrix(set0: ControlSet, set1: ControlSet) -> BeamSplitterMatrix:
    """저장 구성 set0, 1단계 방출 구성 set1 에 대한 빔 스플리터 행렬"""
    c0, s0 = math.cos(set0.phi), math.sin(set0.phi)
    c1, s1 = math.cos(set1.phi), math.sin(set1.phi)
    e2 = np.exp(1j * (set1.chi2 - set0.chi2))
    e3 = np.exp(1j * (set1.chi3 - set0.chi3))
    r = np.array([
        [c1 * c0 * e2 + s1 * s0 * e3, c1 * s0 * e2 - s1 * c0 * e3],
        [s1 * c0 * e2 - c1 * s0 * e3, s1 * s0 * e2 + c1 * c0 * e3],
    ])
    return BeamSplitterMatrix(r)


def _check_overlap(s: complex) -> complex:
    s = complex(s)
    if not (math.isfinite(s.real) and math.isfinite(s.imag)) or abs(s) > 1.0 + 1e-12:
        raise InvalidParameterError("겹침 |s| 는 1 이하여야 합니다", {"abs_s": abs(s)})
    return s


def coalescence_amplitude(set0: ControlSet, set1: ControlSet, s: complex) -> complex:
    """1단계 동시 방출 진폭 sqrt(1+|s|²)·R₃₁*·R₃₂*"""
    s = _check_overlap(s)
    r = bs_matrix(set0, set1)
    return math.sqrt(1.0 + abs(s) ** 2) * np.conj(r.r31) * np.conj(r.r32)


def _stats_from_matrix(r: BeamSplitterMatrix, s: complex) -> TwoPhotonStats:
    weight = 1.0 + abs(s) ** 2
    p1 = weight * abs(r.r31 * r.r32) ** 2
    p2 = weight * abs(r.r41 * r.r42) ** 2
    p_non = min(max(1.0 - p1 - p2, 0.0), 1.0)
    amp = math.sqrt(weight) * np.conj(r.r31) * np.conj(r.r32)
    return TwoPhotonStats(s, complex(amp), p1, p2, p_non)


def coalescence_probs(set0: ControlSet, set1: ControlSet, s: complex) -> TwoPhotonStats:
    """
    단계별 동시 방출 확률.

    P_coal(1) = (1+|s|²)|R₃₁R₃₂|², P_coal(2) = (1+|s|²)|R₄₁R₄₂|², P_noncoal = 1 - 둘의 합
    """
    s = _check_overlap(s)
    return _stats_from_matrix(bs_matrix(set0, set1), s)


def noncoal_gaussian(a: float, delta1: float, delta2: float) -> float:
    """φ⁰ = 0, φ¹ = π/4 구성에서 가우시안 쌍의 비동시 방출 확률 (닫힌 식)"""
    if not (delta1 > 0 and delta2 > 0):
        raise InvalidParameterError("가우시안 폭은 양수여야 합니다", {"delta1": delta1, "delta2": delta2})
    total = delta1 ** 2 + delta2 ** 2
    visibility = 2.0 / (delta2 / delta1 + delta1 / delta2)
    return 0.5 * (1.0 - visibility * math.exp(-(a ** 2) / (2.0 * total)))


SCAN_AXES = ("separation", "width_ratio")


def hom_scan(
    axis: str,
    values: Iterable[float],
    delta1: float = 1.0,
    delta2: float = 1.0,
    separation: float = 0.0,
    set0: Optional[ControlSet] = None,
    set1: Optional[ControlSet] = None,
) -> pd.DataFrame:
    """
    Mandel dip 곡선을 계산합니다.

    Args:
        axis: "separation" (x = a) 또는 "width_ratio" (x = δ₂/δ₁)
        values: 스캔 값들 (오름차순으로 정렬되어 출력)
        delta1, delta2: 폭 (width_ratio 축에서는 delta2 = x·delta1)
        separation: width_ratio 축에서 고정할 거리 a
        set0, set1: 저장/방출 구성 (기본값 φ⁰ = 0, φ¹ = π/4)

    Returns:
        컬럼 x, p_noncoal, p_coal1, p_coal2, abs_s 를 갖는 DataFrame
    """
    if axis not in SCAN_AXES:
        raise InvalidParameterError(f"알 수 없는 스캔 축 '{axis}'", {"allowed": SCAN_AXES})
    xs = np.sort(np.asarray(list(values), dtype=float))
    if xs.size == 0:
        raise InvalidParameterError("스캔 범위가 비어 있습니다")
    set0 = set0 or ControlSet(0.0)
    set1 = set1 or ControlSet(HALF_PI / 2.0)
    r = bs_matrix(set0, set1)

    rows = []
    for x in xs:
        if axis == "separation":
            s = gaussian_overlap(x, delta1, delta2)
        else:
            s = gaussian_overlap(separation, delta1, x * delta1)
        stats = _stats_from_matrix(r, s)
        rows.append((x, stats.p_noncoal, stats.p_coal1, stats.p_coal2, abs(s)))
    return pd.DataFrame(rows, columns=["x", "p_noncoal", "p_coal1", "p_coal2", "abs_s"])


# ------------------------------------------------------------------ Fock oracle

def _pair_amplitudes(v: np.ndarray, w: np.ndarray) -> Dict[Tuple[int, int], complex]:
    """a†(v)a†(w)|0⟩ 를 점유수 기저 |1_m 1_n⟩ (m<n), |2_m⟩ 로 전개"""
    amps = {}
    for m, n in combinations_with_replacement(range(len(v)), 2):
        if m == n:
            amps[(m, n)] = math.sqrt(2.0) * v[m] * w[m]
        else:
            amps[(m, n)] = v[m] * w[n] + v[n] * w[m]
    return amps


def fock_oracle_from_overlap(r: BeamSplitterMatrix, s: complex) -> TwoPhotonStats:
    """
    겹침 s 만으로 Fock 공간을 직접 열거하여 통계를 구합니다.

    채널(저장 입력 0 = Ψ⁰, 1 = Z⁰) × 공간 모드(e₁, e₂) 의 단일 입자 공간에
    R ⊗ I 를 적용한 뒤 두 입자 진폭을 보존 대칭화하여 채널 패턴별로 합산합니다.
    """
    s = _check_overlap(s)
    residual = max(1.0 - abs(s) ** 2, 0.0)
    if residual < SINGLE_MODE_TOL:
        # 두 묶음이 같은 공간 모드: e₁ 하나로 충분
        dim = 1
        coeff_a = np.array([1.0 + 0j])
        coeff_b = np.array([s])
    else:
        dim = 2
        coeff_a = np.array([1.0 + 0j, 0.0])
        coeff_b = np.array([s, math.sqrt(residual)])

    channel_in = np.eye(2)
    v_in = np.kron(channel_in[0], coeff_a)
    w_in = np.kron(channel_in[1], coeff_b)
    transfer = np.kron(r.r, np.eye(dim))
    out = _pair_amplitudes(transfer @ v_in, transfer @ w_in)

    probs = {"coal1": 0.0, "coal2": 0.0, "noncoal": 0.0}
    for (m, n), amp in out.items():
        cm, cn = m // dim, n // dim
        key = "noncoal" if cm != cn else ("coal1" if cm == 0 else "coal2")
        probs[key] += abs(amp) ** 2

    # 두 광자가 원래 모양 그대로 1단계에서 함께 나오는 기준 상태에 대한 사영 진폭
    ref = _pair_amplitudes(np.kron(channel_in[0], coeff_a), np.kron(channel_in[0], coeff_b))
    ref_norm = math.sqrt(1.0 + abs(s) ** 2)
    amp = sum(np.conj(out[key]) * ref[key] for key in out) / ref_norm

    return TwoPhotonStats(s, complex(amp), probs["coal1"], probs["coal2"], probs["noncoal"])


def fock_oracle(r: BeamSplitterMatrix, f1: WavePacket, f2: WavePacket) -> TwoPhotonStats:
    """f₁, f₂ 를 정규직교화한 뒤 fock_oracle_from_overlap 으로 계산"""
    f1.require_normalized()
    f2.require_normalized()
    return fock_oracle_from_overlap(r, overlap(f1, f2))


# ------------------------------------------------------------------ simulated modes

def _inner(a: np.ndarray, b: np.ndarray, dt: float) -> complex:
    return complex(np.vdot(a, b) * dt)


def stats_from_modes(
    modes_a: Dict[str, np.ndarray],
    modes_b: Dict[str, np.ndarray],
    dt: float,
    s: Optional[complex] = None,
) -> TwoPhotonStats:
    """
    각 광자를 따로 시뮬레이션해 얻은 단계별 출력 진폭으로부터 두 광자 통계를 구합니다.

    P_coal(k) = n_Ak·n_Bk + |⟨G_A^k|G_B^k⟩|² 이며, modes 는 정규화되지 않은
    출력 진폭 √c·u(z_out, t) 를 단계 창별로 자른 것입니다.

    Args:
        modes_a, modes_b: {"stage1": ndarray, "stage2": ndarray}
        dt: 샘플 간격
        s: 저장된 두 묶음의 겹침 (없으면 1단계 출력 모드의 정규화 겹침)
    """
    probs = []
    for stage in STAGES:
        ga, gb = np.asarray(modes_a[stage]), np.asarray(modes_b[stage])
        if ga.shape != gb.shape:
            raise GridMismatchError(f"{stage} 출력 모드 길이가 다릅니다", {"a": ga.shape, "b": gb.shape})
        n_a = _inner(ga, ga, dt).real
        n_b = _inner(gb, gb, dt).real
        probs.append(n_a * n_b + abs(_inner(ga, gb, dt)) ** 2)

    if s is None:
        s = 0j
        for stage in STAGES:
            ga, gb = np.asarray(modes_a[stage]), np.asarray(modes_b[stage])
            na, nb = _inner(ga, ga, dt).real, _inner(gb, gb, dt).real
            if na > 0 and nb > 0:
                s = _inner(ga, gb, dt) / math.sqrt(na * nb)
                break

    p1, p2 = probs
    p_non = min(max(1.0 - p1 - p2, 0.0), 1.0)
    return TwoPhotonStats(complex(s), None, float(p1), float(p2), p_non)


def random_control_set(rng: np.random.Generator) -> ControlSet:
    """무작위 ControlSet (φ ∈ [0, π/2], χ ∈ [0, 2π))"""
    return ControlSet(
        float(rng.uniform(0.0, HALF_PI)),
        float(rng.uniform(0.0, 2.0 * math.pi)),
        float(rng.uniform(0.0, 2.0 * math.pi)),
    )
