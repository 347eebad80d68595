import os
import sys
import logging
from logging.handlers import TimedRotatingFileHandler

# --- [로깅 시스템 설정] ---

_HANDLER_TAG = "_stored_light_handler"


class ExcludeErrorFilter(logging.Filter):
    """ERROR(40) 레벨 이상의 로그를 제외하여 run.log 를 깨끗하게 유지"""
    def filter(self, record):
        return record.levelno < logging.ERROR


def _tagged(handler: logging.Handler) -> logging.Handler:
    setattr(handler, _HANDLER_TAG, True)
    return handler


def _remove_tagged(logger: logging.Logger):
    for handler in list(logger.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            logger.removeHandler(handler)
            handler.close()


def setup_structured_logging(log_dir: str = "logs", console_level: int = logging.INFO):
    """Run, Error, Progress 로그를 분리하여 초기화합니다.

    여러 번 호출해도 핸들러가 중복으로 붙지 않습니다 (테스트/스윕 워커 재호출 대비).
    """
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    # 기본 포맷 설정
    standard_format = logging.Formatter('%(asctime)s [%(levelname)s] %(message)s', '%H:%M:%S')
    json_format = logging.Formatter(
        '{"timestamp": "%(asctime)s", "level": "%(levelname)s", "module": "%(module)s", "message": "%(message)s"}'
    )

    # [1] Root Logger 설정 (전체 시스템용)
    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    _remove_tagged(root_logger)

    # 콘솔 핸들러: 실시간 확인용
    console_handler = _tagged(logging.StreamHandler(sys.stdout))
    console_handler.setLevel(console_level)
    console_handler.setFormatter(standard_format)
    root_logger.addHandler(console_handler)

    # Run Log 핸들러: 일반 실행 로그 (INFO~WARNING, 에러 제외)
    run_handler = _tagged(TimedRotatingFileHandler(
        filename=os.path.join(log_dir, "run.log"), when="midnight", interval=1, backupCount=30, encoding="utf-8"
    ))
    run_handler.setLevel(logging.INFO)
    run_handler.setFormatter(json_format)
    run_handler.addFilter(ExcludeErrorFilter())
    root_logger.addHandler(run_handler)

    # Error Log 핸들러: 장애 로그 (ERROR~CRITICAL만 기록)
    error_handler = _tagged(TimedRotatingFileHandler(
        filename=os.path.join(log_dir, "error.log"), when="midnight", interval=1, backupCount=90, encoding="utf-8"
    ))
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(json_format)
    root_logger.addHandler(error_handler)

    # [2] Progress Logger 설정 (시뮬레이션 진행 상황 CSV 전용)
    # propagate=False 로 run.log 에 중복 기록되는 것을 방지합니다.
    progress_logger = logging.getLogger("progress")
    progress_logger.setLevel(logging.INFO)
    progress_logger.propagate = False
    _remove_tagged(progress_logger)

    progress_handler = _tagged(TimedRotatingFileHandler(
        filename=os.path.join(log_dir, "progress.log"), when="midnight", interval=1, backupCount=7, encoding="utf-8"
    ))
    # 표 형태의 데이터이므로 메시지만 기록
    progress_handler.setFormatter(logging.Formatter('%(message)s'))
    progress_logger.addHandler(progress_handler)
