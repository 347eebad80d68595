"""
stored-light 명령행 도구

    stored-light simulate  --config scenario.json [--out DIR] [--format csv|json|both] [--workers N]
    stored-light hom-scan  [--config scenario.json] [--axis separation|width_ratio] ...
    stored-light bs-matrix --phi0 0 --phi1 0.785
    stored-light validate  --config scenario.json
    stored-light selfcheck --seed 0 --draws 1000
"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

from rich.console import Console
from rich.table import Table

from stored_light.core.controls import ControlSet
from stored_light.core.interference import SCAN_AXES, bs_matrix, hom_scan
from stored_light.exceptions import ConfigurationError, ScenarioError, StoredLightError
from stored_light.runner.pipeline import closed_form_sweep, run_scenario, selfcheck
from stored_light.runner.scenario import OUTPUT_FORMATS, Scenario, load_scenario
from stored_light.runner.writer import jsonable, write_outputs
from stored_light.simulation.diagnostics import validate
from stored_light.utils import setup_structured_logging

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _common(parser: argparse.ArgumentParser, config_required: bool = False):
    parser.add_argument("--config", required=config_required, help="JSON 시나리오 파일")
    parser.add_argument("--out", help="출력 디렉터리 (outputs.dir 대체)")
    parser.add_argument("--format", choices=OUTPUT_FORMATS, help="출력 형식 (outputs.format 대체)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stored-light", description="삼각(tripod) 매질 저장광 시뮬레이터")
    parser.add_argument("--log-dir", default="logs", help="로그 디렉터리")
    sub = parser.add_subparsers(dest="command", metavar="{simulate,hom-scan,bs-matrix,validate,selfcheck}")
    sub.required = True

    p = sub.add_parser("simulate", help="저장 → 2단계 방출 시뮬레이션 실행")
    _common(p, config_required=True)
    p.add_argument("--workers", type=int, default=1, help="스윕 워커 프로세스 수")
    p.add_argument("--progress-every", type=int, default=0, help="progress.log 기록 간격 (스텝)")

    p = sub.add_parser("hom-scan", help="닫힌 식 Mandel dip 스캔")
    _common(p)
    p.add_argument("--axis", choices=SCAN_AXES, default="separation")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=5.0)
    p.add_argument("--points", type=int, default=51)
    p.add_argument("--delta1", type=float, default=1.0)
    p.add_argument("--delta2", type=float, default=1.0)
    p.add_argument("--separation", type=float, default=0.0)
    p.add_argument("--name", default="hom_scan")

    p = sub.add_parser("bs-matrix", help="저장/방출 구성에 대한 빔 스플리터 행렬 출력")
    for suffix in ("0", "1"):
        p.add_argument(f"--phi{suffix}", type=float, default=0.0)
        p.add_argument(f"--chi2{suffix}", type=float, default=0.0)
        p.add_argument(f"--chi3{suffix}", type=float, default=0.0)

    p = sub.add_parser("validate", help="CFL/단열성/해상도 진단만 수행")
    p.add_argument("--config", required=True)

    p = sub.add_parser("selfcheck", help="무작위 구성에 대한 해석 모듈 자체 점검")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=int, default=1000)
    return parser


def _load(args) -> Scenario:
    scenario = load_scenario(args.config)
    outputs = scenario.outputs
    if getattr(args, "out", None):
        outputs = replace(outputs, dir=args.out)
    if getattr(args, "format", None):
        outputs = replace(outputs, format=args.format)
    return replace(scenario, outputs=outputs)


# ------------------------------------------------------------------ commands

def cmd_simulate(args) -> int:
    summary = run_scenario(_load(args), workers=args.workers, progress_every=args.progress_every)
    table = Table(title=f"[bold white]{summary['name']}[/]", show_header=True, header_style="bold magenta")
    table.add_column("항목", style="cyan")
    table.add_column("값", justify="right")
    for label, value in sorted(summary["fractions"].items()):
        table.add_row(f"fraction {label}", f"{value:.6f}")
    table.add_row("total released", f"{summary['total_released']:.6f}")
    table.add_row("conservation residual", f"{summary['conservation_residual']:.2e}")
    if summary.get("two_photon"):
        stats = summary["two_photon"]
        table.add_row("|s|", f"{stats['abs_s']:.6f}")
        for key in ("p_coal1", "p_coal2", "p_noncoal"):
            table.add_row(key, f"{stats[key]:.6f}")
    console.print(table)
    return EXIT_OK


def cmd_hom_scan(args) -> int:
    if args.config:
        scenario = _load(args)
        if scenario.sweep is None:
            raise ConfigurationError("hom-scan 에 사용할 sweep 섹션이 시나리오에 없습니다", {"config": args.config})
        frame = closed_form_sweep(scenario)
        out_dir, name, fmt = scenario.outputs.dir, scenario.outputs.name, scenario.outputs.format
    else:
        if args.points < 1:
            raise ConfigurationError("스캔 점 수는 1 이상이어야 합니다", {"points": args.points})
        step = (args.stop - args.start) / (args.points - 1) if args.points > 1 else 0.0
        values = [args.start + i * step for i in range(args.points)]
        frame = hom_scan(args.axis, values, args.delta1, args.delta2, args.separation)
        out_dir, name, fmt = args.out or "results", args.name, args.format or "csv"

    summary = {"kind": "hom-scan", "name": name, "scan": frame.to_dict(orient="list")}
    paths = write_outputs(out_dir, name, fmt, summary=jsonable(summary), frame=frame)
    best = frame.loc[frame["p_noncoal"].idxmin()]
    console.print(
        f"📉 최소 p_noncoal = {best['p_noncoal']:.6f} (x = {best['x']:.4f}), "
        f"파일: {', '.join(sorted(paths.values()))}"
    )
    return EXIT_OK


def cmd_bs_matrix(args) -> int:
    set0 = ControlSet(args.phi0, args.chi20, args.chi30)
    set1 = ControlSet(args.phi1, args.chi21, args.chi31)
    r = bs_matrix(set0, set1)
    table = Table(title="[bold white]R (출력 단계 ← 저장 채널)[/]", show_lines=True)
    table.add_column("", style="cyan")
    table.add_column("Ψ⁰ (입력 1)", justify="right")
    table.add_column("Z⁰ (입력 2)", justify="right")
    for label, row in zip(("1단계 (출력 3)", "2단계 (출력 4)"), r.r):
        table.add_row(label, *[f"{v.real:+.6f} {v.imag:+.6f}i" for v in row])
    console.print(table)
    console.print(f"‖R†R − I‖ = {r.unitarity_error():.2e}")
    return EXIT_OK


def cmd_validate(args) -> int:
    diagnostics = validate(load_scenario(args.config))
    table = Table(title="[bold white]시나리오 진단[/]", show_header=True, header_style="bold yellow")
    table.add_column("항목", style="cyan")
    table.add_column("값", justify="right")
    table.add_row("cfl", f"{diagnostics.cfl:.6f}")
    table.add_row("adiabaticity", f"{diagnostics.adiabaticity:.4f}")
    table.add_row("cells / width", f"{diagnostics.grid_resolution:.1f}")
    table.add_row("cells / stored width", f"{diagnostics.stored_resolution:.1f}")
    table.add_row("steps", str(diagnostics.steps))
    console.print(table)
    for w in diagnostics.warnings:
        console.print(f"[yellow]⚠️ {w}[/]")
    return EXIT_OK


def cmd_selfcheck(args) -> int:
    report = selfcheck(args.seed, args.draws)
    table = Table(title=f"[bold white]selfcheck (seed={args.seed}, draws={args.draws})[/]")
    table.add_column("점검", style="cyan")
    table.add_column("최대 편차", justify="right")
    table.add_column("허용치", justify="right")
    for key, value in report["worst"].items():
        tol = report["tolerances"][key]
        color = "green" if value < tol else "red"
        table.add_row(key, f"[{color}]{value:.2e}[/{color}]", f"{tol:.0e}")
    console.print(table)
    return EXIT_OK if report["passed"] else EXIT_RUNTIME


COMMANDS = {
    "simulate": cmd_simulate,
    "hom-scan": cmd_hom_scan,
    "bs-matrix": cmd_bs_matrix,
    "validate": cmd_validate,
    "selfcheck": cmd_selfcheck,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_structured_logging(args.log_dir)

    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, ConfigurationError) as e:
        logger.error(f"설정 오류: {e}")
        console.print(f"[red]❌ {e}[/]")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"파일 오류: {e}")
        console.print(f"[red]❌ {e}[/]")
        return EXIT_USAGE
    except StoredLightError as e:
        logger.error(f"실행 실패: {e}")
        console.print(f"[red]❌ {e}[/]")
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        console.print("\n👋 사용자에 의해 중단되었습니다.")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
