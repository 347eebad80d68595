"""
시나리오 실행 파이프라인

저장 → 2단계 방출 시뮬레이션, 단계별 방출 비율, 저장된 두 묶음의 겹침,
두 광자 통계(닫힌 식 + 시뮬레이션 모드), 파일 기록, 실행 원장/알림까지 한 번에 처리합니다.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from stored_light.core.controls import HALF_PI, ControlSet
from stored_light.core.database import RunLedger
from stored_light.core.interference import (
    STAGES,
    WavePacket,
    bs_matrix,
    coalescence_probs,
    fock_oracle_from_overlap,
    hom_scan,
    overlap,
    random_control_set,
    stats_from_modes,
)
from stored_light.core.polariton import PolaritonBasis, to_polaritons
from stored_light.exceptions import ScenarioValidationError, StoredLightError
from stored_light.runner.scenario import SCHEMA_VERSION, Scenario, with_second_switch_off
from stored_light.runner.timeline import build_timeline, separation_offset
from stored_light.runner.writer import jsonable, timeseries_frame, write_outputs
from stored_light.simulation import engine
from stored_light.simulation.diagnostics import validate
from stored_light.simulation.engine import RunResult
from stored_light.simulation.notifier import RunNotifier

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["x", "p_noncoal", "p_coal1", "p_coal2", "abs_s"]
E2E_COLUMNS = SWEEP_COLUMNS + ["p_noncoal_closed_form"]

# selfcheck 허용 오차
SELFCHECK_TOLERANCES = {"unitarity": 1e-12, "closure": 1e-12, "oracle": 1e-10, "phase_law": 1e-12}


# ------------------------------------------------------------------ single scenario

def simulate_packets(scenario: Scenario, progress_every: int = 0) -> List[RunResult]:
    """파동묶음별로 따로 실행합니다 (방정식이 선형이므로 한 광자 모드 함수를 각각 구함)."""
    if not scenario.two_packets:
        return [engine.run(scenario, progress_every=progress_every)]
    return [engine.run(scenario, packets=[i], progress_every=progress_every) for i in range(2)]


def stored_overlap(scenario: Scenario, results: Sequence[RunResult]) -> complex:
    """
    방출 직전 스냅샷에서 두 저장 묶음의 공간 겹침 s 를 구합니다.

    첫 번째 묶음은 첫 저장 구성의 Ψ 에, 두 번째 묶음은 같은 기저의 Z 에 놓여 있습니다.
    """
    basis = PolaritonBasis.stored(scenario.storage[0].control)
    z = scenario.medium.z
    first = to_polaritons(results[0].snapshots["release"], basis).psi
    second = to_polaritons(results[1].snapshots["release"], basis).z_pol
    return overlap(WavePacket.sampled(z, first, normalize=True), WavePacket.sampled(z, second, normalize=True))


def _fractions(results: Sequence[RunResult]) -> Dict[str, float]:
    total_in = sum(r.input_norm for r in results)
    if total_in <= 0:
        return {w.label: 0.0 for w in results[0].stage_windows}
    return {
        w.label: float(sum(engine.released_fraction(r, w.label) * r.input_norm for r in results) / total_in)
        for w in results[0].stage_windows
    }


def _modes(result: RunResult, record_every: int) -> Dict[str, list]:
    return {stage: result.stage_output(stage)[::record_every] for stage in STAGES}


def summarize(scenario: Scenario, results: Sequence[RunResult], diagnostics=None) -> Dict:
    """실행 결과를 JSON 으로 기록할 요약 dict 로 만듭니다."""
    fractions = _fractions(results)
    total_in = sum(r.input_norm for r in results)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.outputs.name,
        "kind": "simulate",
        "packets": len(scenario.packets),
        "cells": scenario.medium.cells,
        "dt": results[0].dt,
        "input_norm": total_in,
        "fractions": fractions,
        "total_released": fractions.get("stage1", 0.0) + fractions.get("stage2", 0.0),
        "stored_final": sum(r.final_norm for r in results) / total_in if total_in > 0 else 0.0,
        "conservation_residual": max(r.conservation_residual for r in results),
        "output_modes": {
            f"packet{i}": _modes(r, scenario.outputs.record_every) for i, r in enumerate(results)
        },
        "bs_matrix": bs_matrix(scenario.storage[0].control, scenario.release.control).to_rows(),
        "two_photon": None,
        "two_photon_closed_form": None,
        "stored_overlap": None,
        "diagnostics": diagnostics.to_dict() if diagnostics is not None else None,
    }
    if scenario.two_packets:
        s = stored_overlap(scenario, results)
        closed = coalescence_probs(scenario.storage[0].control, scenario.release.control, s)
        modes = [{stage: r.stage_output(stage) for stage in STAGES} for r in results]
        simulated = stats_from_modes(modes[0], modes[1], results[0].dt, s=s)
        summary["stored_overlap"] = s
        summary["two_photon"] = simulated.to_dict()
        summary["two_photon_closed_form"] = closed.to_dict()
        logger.info(
            f"🔬 two-photon: |s|={abs(s):.6f}, p_noncoal(sim)={simulated.p_noncoal:.6f}, "
            f"p_noncoal(closed)={closed.p_noncoal:.6f}"
        )
    return summary


def _timeseries(scenario: Scenario, results: Sequence[RunResult]) -> pd.DataFrame:
    base = results[0]
    return timeseries_frame(
        base.times,
        sum(r.flux for r in results),
        sum(r.norm_trace for r in results),
        base.theta,
        base.phi,
        record_every=scenario.outputs.record_every,
    )


def run_scenario(
    scenario: Scenario,
    workers: int = 1,
    progress_every: int = 0,
    ledger: Optional[RunLedger] = None,
) -> Dict:
    """
    시나리오 하나를 끝까지 실행하고 CSV/JSON 을 기록합니다.

    Returns:
        JSON 으로 기록된 요약 dict (복소수는 [re, im])
    """
    name = scenario.outputs.name
    notifier = RunNotifier(scenario.notify.webhook_url, scenario.notify.timeout)
    diagnostics = validate(scenario)
    logger.info(f"🚀 [{name}] 시뮬레이션 시작: packets={len(scenario.packets)}, cells={scenario.medium.cells}")

    try:
        results = simulate_packets(scenario, progress_every)
        summary = summarize(scenario, results, diagnostics)
        if scenario.sweep is not None:
            sweep = run_sweep(scenario, workers)
            summary["sweep"] = sweep.to_dict(orient="list")
            write_outputs(scenario.outputs.dir, name, scenario.outputs.format, frame=sweep, suffix="_sweep")
        summary = jsonable(summary)
        paths = write_outputs(
            scenario.outputs.dir, name, scenario.outputs.format,
            summary=summary, frame=_timeseries(scenario, results),
        )
    except StoredLightError as e:
        notifier.notify_failure(name, e)
        raise

    ledger_path = scenario.outputs.ledger
    if ledger is None and ledger_path:
        ledger = RunLedger(ledger_path)
        try:
            ledger.record_run(summary)
        finally:
            ledger.close()
    elif ledger is not None:
        ledger.record_run(summary)

    notifier.notify_run(summary)
    logger.info(f"✅ [{name}] 완료: fractions={summary['fractions']}, files={sorted(paths.values())}")
    return summary


# ------------------------------------------------------------------ sweeps

def closed_form_sweep(scenario: Scenario) -> pd.DataFrame:
    """시나리오의 sweep 설정과 저장/방출 구성으로 닫힌 식 Mandel dip 곡선을 구합니다."""
    sweep = scenario.sweep
    return hom_scan(
        sweep.axis,
        sweep.values(),
        delta1=sweep.delta1,
        delta2=sweep.delta2,
        separation=sweep.separation,
        set0=scenario.storage[0].control,
        set1=scenario.release.control,
    )


def _sweep_point(scenario: Scenario, x: float) -> Dict:
    """워커 프로세스에서 실행되는 한 점 (독립된 솔버 인스턴스)"""
    results = simulate_packets(scenario)
    s = stored_overlap(scenario, results)
    modes = [{stage: r.stage_output(stage) for stage in STAGES} for r in results]
    simulated = stats_from_modes(modes[0], modes[1], results[0].dt, s=s)
    closed = coalescence_probs(scenario.storage[0].control, scenario.release.control, s)
    return {
        "x": x,
        "p_noncoal": simulated.p_noncoal,
        "p_coal1": simulated.p_coal1,
        "p_coal2": simulated.p_coal2,
        "abs_s": abs(s),
        "p_noncoal_closed_form": closed.p_noncoal,
    }


def separation_sweep(scenario: Scenario, workers: int = 1) -> pd.DataFrame:
    """
    두 번째 묶음의 저장 시각을 x·δ/c 만큼 늦춰 저장 위치를 x (저장된 폭 단위) 만큼 벌리고
    각 점을 끝까지 시뮬레이션합니다. 결과는 x 오름차순입니다.
    """
    if not scenario.two_packets:
        raise ScenarioValidationError("종단 간 스윕에는 파동묶음 두 개가 필요합니다")
    base = build_timeline(scenario).switch_offs[1]
    xs = sorted(scenario.sweep.values())
    points = [with_second_switch_off(scenario, base + separation_offset(scenario, x)) for x in xs]
    # 각 점의 결과는 파일로 쓰지 않음
    points = [replace(p, sweep=None) for p in points]

    if workers <= 1:
        rows = [_sweep_point(p, x) for p, x in tqdm(zip(points, xs), total=len(xs), desc="sweep")]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(tqdm(ex.map(_sweep_point, points, xs), total=len(xs), desc="sweep"))
    frame = pd.DataFrame(rows, columns=E2E_COLUMNS)
    return frame.sort_values("x", kind="mergesort").reset_index(drop=True)


def run_sweep(scenario: Scenario, workers: int = 1) -> pd.DataFrame:
    if scenario.sweep.end_to_end:
        return separation_sweep(scenario, workers)
    return closed_form_sweep(scenario)


# ------------------------------------------------------------------ randomized self check

def selfcheck(seed: int = 0, draws: int = 1000) -> Dict:
    """
    무작위 구성에 대해 유니터리성, 확률 합, Fock 오라클 일치, 위상 법칙을 점검하고
    항목별 최대 편차를 돌려줍니다.
    """
    rng = np.random.default_rng(seed)
    worst = {key: 0.0 for key in SELFCHECK_TOLERANCES}

    for _ in range(draws):
        set0, set1 = random_control_set(rng), random_control_set(rng)
        r = bs_matrix(set0, set1)
        worst["unitarity"] = max(worst["unitarity"], r.unitarity_error())

        s = complex(rng.uniform(0.0, 1.0) * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))
        closed = coalescence_probs(set0, set1, s)
        oracle = fock_oracle_from_overlap(r, s)
        worst["closure"] = max(worst["closure"], closed.closure_error, oracle.closure_error)
        deviation = max(
            abs(closed.p_coal1 - oracle.p_coal1),
            abs(closed.p_coal2 - oracle.p_coal2),
            abs(closed.p_noncoal - oracle.p_noncoal),
            abs(closed.amp_coal1 - oracle.amp_coal1),
        )
        worst["oracle"] = max(worst["oracle"], deviation)

    base = ControlSet(HALF_PI / 2.0)
    for s in (0.0, 0.5, 1.0):
        for delta in np.linspace(0.0, 2.0 * math.pi, 100, endpoint=False):
            p1 = coalescence_probs(base, ControlSet(HALF_PI / 2.0, float(delta), 0.0), s).p_coal1
            expected = 0.25 * (1.0 + s ** 2) * math.sin(delta) ** 2
            worst["phase_law"] = max(worst["phase_law"], abs(p1 - expected))

    passed = all(worst[key] < tol for key, tol in SELFCHECK_TOLERANCES.items())
    logger.info(f"🧪 selfcheck seed={seed}, draws={draws}: {worst} (passed={passed})")
    return {"seed": seed, "draws": draws, "worst": worst, "tolerances": dict(SELFCHECK_TOLERANCES), "passed": passed}
