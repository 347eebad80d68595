import os
import sqlite3

import pandas as pd
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text


NUMERIC_COLUMNS = [
    "fraction_stage1", "fraction_stage2", "stored_final",
    "p_coal1", "p_coal2", "p_noncoal", "abs_s", "conservation_residual",
]


def load_runs(db_path: str = "runs.db") -> pd.DataFrame:
    conn = sqlite3.connect(db_path)
    try:
        df = pd.read_sql_query("SELECT * FROM runs ORDER BY id", conn)
    finally:
        conn.close()
    # 한 광자 실행은 두 광자 컬럼이 NULL 이라 object 로 읽힘
    df[NUMERIC_COLUMNS] = df[NUMERIC_COLUMNS].apply(pd.to_numeric, errors="coerce")
    return df


def generate_run_report(db_path="runs.db", console=None):
    console = console or Console()
    if not os.path.exists(db_path):
        console.print(f"❌ 에러: {db_path} 파일을 찾을 수 없습니다.")
        return None

    # 1. 데이터 로드
    df = load_runs(db_path)
    if df.empty:
        console.print("📭 기록된 실행이 없습니다.")
        return df

    # 상단 요약 패널
    worst_residual = df["conservation_residual"].max()
    pairs = df[df["packets"] == 2]
    summary_text = Text.assemble(
        ("전체 실행: ", "white"), (f"{len(df)}건", "cyan"), (" | "),
        ("두 광자 실행: ", "white"), (f"{len(pairs)}건", "cyan"), (" | "),
        ("최대 보존 잔차: ", "white"), (f"{worst_residual:.2e}", "red" if worst_residual > 1e-6 else "green"),
    )
    console.print(Panel(summary_text, title="[bold white]저장광 실행 원장 리포트[/]", border_style="green"))

    # 2. 실행별 테이블
    table = Table(show_header=True, header_style="bold magenta", show_lines=True, expand=True)
    table.add_column("시각", justify="center", style="dim", width=19)
    table.add_column("이름", justify="left")
    table.add_column("셀", justify="right", width=6)
    table.add_column("1단계", justify="right")
    table.add_column("2단계", justify="right")
    table.add_column("잔류", justify="right")
    table.add_column("|s|", justify="right")
    table.add_column("p_noncoal", justify="right")

    def fmt(value, spec=".4f"):
        return "-" if pd.isna(value) else format(value, spec)

    for _, row in df.iloc[::-1].iterrows():
        table.add_row(
            str(row["created_at"]),
            str(row["name"]),
            str(row["cells"]),
            fmt(row["fraction_stage1"]),
            fmt(row["fraction_stage2"]),
            fmt(row["stored_final"], ".2e"),
            fmt(row["abs_s"]),
            fmt(row["p_noncoal"]),
        )
    console.print(table)

    # 3. 시나리오별 평균
    grouped = df.groupby("name")[["fraction_stage1", "fraction_stage2", "p_noncoal"]].mean().reset_index()
    name_table = Table(title="\n[bold yellow]시나리오별 평균[/]", show_header=True, header_style="bold yellow")
    name_table.add_column("시나리오", style="cyan")
    name_table.add_column("1단계", justify="right")
    name_table.add_column("2단계", justify="right")
    name_table.add_column("p_noncoal", justify="right")
    for _, row in grouped.iterrows():
        name_table.add_row(
            row["name"], fmt(row["fraction_stage1"]), fmt(row["fraction_stage2"]), fmt(row["p_noncoal"])
        )
    console.print(name_table)
    return df


if __name__ == "__main__":
    generate_run_report()
