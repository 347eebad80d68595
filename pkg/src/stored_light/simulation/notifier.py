import logging
from typing import Dict, List, Optional

import requests

# [1] 일반 실행/에러 로그용 (run.log, error.log 로 자동 분산)
logger = logging.getLogger(__name__)

# [2] 진행 상황 테이블 전용 (progress.log 로만 기록됨)
progress_logger = logging.getLogger("progress")

PROGRESS_HEADER = "run,t,norm,outflow,theta"


class ProgressReporter:
    """시뮬레이션 진행 상황을 CSV 행으로 progress.log 에 적재합니다."""

    def __init__(self, run_name: str, every: int = 0):
        self.run_name = run_name
        self.every = max(int(every), 0)
        self._header_written = False

    def due(self, step_index: int) -> bool:
        return self.every > 0 and step_index % self.every == 0

    def report(self, t: float, norm: float, outflow: float, theta: float):
        if not self._header_written:
            progress_logger.info(PROGRESS_HEADER)
            self._header_written = True
        # 분석 프로그램에서 읽기 쉽도록 공백 없이 기록
        progress_logger.info(f"{self.run_name},{t:.6f},{norm:.12e},{outflow:.12e},{theta:.6f}")


class RunNotifier:
    """Slack 호환 Webhook 으로 실행 요약을 보냅니다. 실패해도 예외를 올리지 않습니다."""

    def __init__(self, webhook_url: Optional[str] = None, timeout: float = 5.0):
        self.webhook_url = webhook_url
        self.timeout = timeout

    def _send_slack(self, text: str) -> bool:
        """Slack Webhook 을 통해 메시지를 전송합니다."""
        if not self.webhook_url:
            return False
        try:
            response = requests.post(self.webhook_url, json={"text": text}, timeout=self.timeout)
            response.raise_for_status()
            return True
        except Exception as e:
            logger.error(f"Webhook 전송 실패: {e}")
            return False

    def _send_slack_blocks(self, blocks: List[Dict], fallback: str = "") -> bool:
        """Slack Block Kit 메시지 전송 헬퍼"""
        if not self.webhook_url:
            return False
        try:
            payload = {"blocks": blocks, "text": fallback}
            response = requests.post(self.webhook_url, json=payload, timeout=self.timeout)
            response.raise_for_status()
            return True
        except Exception as e:
            logger.error(f"Webhook Block Kit 전송 실패: {e}")
            return False

    def notify_run(self, summary: Dict) -> bool:
        """실행 요약: 단계별 방출 비율과 두 광자 통계"""
        name = summary.get("name", "scenario")
        fractions = summary.get("fractions", {})
        fields = [
            {"type": "mrkdwn", "text": f"*{label}:*\n{value:.4f}"}
            for label, value in sorted(fractions.items())
        ]
        stats = summary.get("two_photon")
        if stats:
            fields.append({"type": "mrkdwn", "text": f"*p_noncoal:*\n{stats['p_noncoal']:.4f}"})
        residual = summary.get("conservation_residual")
        if residual is not None:
            fields.append({"type": "mrkdwn", "text": f"*보존 잔차:*\n{residual:.2e}"})

        blocks = [
            {"type": "header", "text": {"type": "plain_text", "text": f"💡 저장광 실행 완료 ({name})"}},
            {"type": "section", "fields": fields[:10]},
            {"type": "divider"},
        ]
        logger.info(f"RUN_DONE:{name},fractions:{fractions}")
        return self._send_slack_blocks(blocks, fallback=f"저장광 실행 완료 ({name})")

    def notify_failure(self, name: str, error: Exception) -> bool:
        msg = f"🚨 [실행 실패] {name}: {error}"
        logger.error(msg)
        return self._send_slack(msg)
