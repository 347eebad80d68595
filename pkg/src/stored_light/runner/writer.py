"""
결과 파일 기록 (CSV: pandas, JSON: 정렬된 키)

같은 입력이면 바이트 단위로 같은 파일이 나오도록 부동소수 형식과 키 순서를 고정합니다.
"""

import json
import logging
import os
from typing import Dict, Optional

import numpy as np
import pandas as pd

from stored_light.exceptions import ConfigurationError
from stored_light.runner.scenario import SCHEMA_VERSION

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"
TIMESERIES_COLUMNS = ["t", "flux", "norm", "theta", "phi"]


def _ensure_dir(path: str):
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise ConfigurationError(f"출력 경로를 만들 수 없습니다: {directory}", {"error": str(e)}) from e


def timeseries_frame(times, flux, norm, theta, phi, record_every: int = 1) -> pd.DataFrame:
    frame = pd.DataFrame({"t": times, "flux": flux, "norm": norm, "theta": theta, "phi": phi})
    return frame.iloc[::record_every].reset_index(drop=True)[TIMESERIES_COLUMNS]


def write_csv(frame: pd.DataFrame, path: str) -> str:
    _ensure_dir(path)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise ConfigurationError(f"CSV 를 쓸 수 없습니다: {path}", {"error": str(e)}) from e
    logger.info(f"📄 CSV 저장: {path} ({len(frame)} rows)")
    return path


def jsonable(value):
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_json(summary: Dict, path: str) -> str:
    payload = dict(jsonable(summary))
    payload["schema_version"] = SCHEMA_VERSION
    _ensure_dir(path)
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, sort_keys=True, indent=2, ensure_ascii=False)
            f.write("\n")
    except OSError as e:
        raise ConfigurationError(f"JSON 을 쓸 수 없습니다: {path}", {"error": str(e)}) from e
    logger.info(f"📄 JSON 저장: {path}")
    return path


def write_outputs(
    out_dir: str,
    name: str,
    fmt: str,
    summary: Optional[Dict] = None,
    frame: Optional[pd.DataFrame] = None,
    suffix: str = "",
) -> Dict[str, str]:
    """형식(csv/json/both)에 맞춰 파일을 쓰고 경로를 돌려줍니다."""
    paths = {}
    base = os.path.join(out_dir, f"{name}{suffix}")
    if frame is not None and fmt in ("csv", "both"):
        paths["csv"] = write_csv(frame, base + ".csv")
    if summary is not None and fmt in ("json", "both"):
        paths["json"] = write_json(summary, base + ".json")
    return paths
