import json
import sqlite3
from datetime import datetime
from typing import Dict, List, Optional

###### QUERY ######
# 시나리오별 평균 1단계 방출 비율: SELECT name, AVG(fraction_stage1) FROM runs GROUP BY name
# 보존 잔차가 큰 실행: SELECT * FROM runs WHERE conservation_residual > 1e-6
###################


class RunLedger:
    """실행 요약을 SQLite 에 누적 기록합니다."""

    def __init__(self, db_name: str = "runs.db"):
        self.conn = sqlite3.connect(db_name, check_same_thread=False)
        self.conn.row_factory = sqlite3.Row  # 결과를 딕셔너리 형태로 받기 위함
        self._create_table()

    def _create_table(self):
        query = """
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            name TEXT,
            kind TEXT,
            packets INTEGER,
            cells INTEGER,
            -- 단계별 방출 비율 --
            fraction_stage1 REAL,
            fraction_stage2 REAL,
            stored_final REAL,
            -----------------------
            p_coal1 REAL,
            p_coal2 REAL,
            p_noncoal REAL,
            abs_s REAL,
            conservation_residual REAL,
            summary TEXT,
            created_at TEXT
        )
        """
        self.conn.execute(query)
        self.conn.commit()

    def record_run(self, summary: Dict) -> int:
        """run_scenario 요약(dict)을 한 행으로 저장"""
        fractions = summary.get("fractions", {})
        stats = summary.get("two_photon") or {}
        query = """
        INSERT INTO runs (
            name, kind, packets, cells,
            fraction_stage1, fraction_stage2, stored_final,
            p_coal1, p_coal2, p_noncoal, abs_s,
            conservation_residual, summary, created_at
        ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
        """
        params = (
            summary.get("name"), summary.get("kind", "simulate"), summary.get("packets"), summary.get("cells"),
            fractions.get("stage1"), fractions.get("stage2"), summary.get("stored_final"),
            stats.get("p_coal1"), stats.get("p_coal2"), stats.get("p_noncoal"), stats.get("abs_s"),
            summary.get("conservation_residual"),
            json.dumps(summary, sort_keys=True),
            datetime.now().strftime('%Y-%m-%d %H:%M:%S'),
        )
        cursor = self.conn.execute(query, params)
        self.conn.commit()
        return cursor.lastrowid

    def load_runs(self, name: Optional[str] = None) -> List[Dict]:
        if name is None:
            cursor = self.conn.execute("SELECT * FROM runs ORDER BY id")
        else:
            cursor = self.conn.execute("SELECT * FROM runs WHERE name = ? ORDER BY id", (name,))
        return [dict(row) for row in cursor.fetchall()]

    def close(self):
        self.conn.close()
