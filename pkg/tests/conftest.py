import copy
import json
import logging

import pytest

from stored_light.runner.scenario import parse_scenario
from stored_light.utils import _remove_tagged

BASE_DOC = {
    "medium": {"cells": 256},
    "release": {"phi": 0.0},
    "packets": [{"center": 6.0, "width": 1.0}],
}


@pytest.fixture(autouse=True)
def reset_logging():
    # main() 이 붙인 핸들러가 pytest 캡처 스트림을 잡고 남지 않도록 정리
    yield
    _remove_tagged(logging.getLogger())
    _remove_tagged(logging.getLogger("progress"))
    logging.getLogger("progress").propagate = True


@pytest.fixture
def make_doc():
    """작은 격자의 단일 묶음 시나리오 문서. 섹션 단위로 덮어쓸 수 있습니다."""
    def _make(**sections):
        doc = copy.deepcopy(BASE_DOC)
        doc.update(sections)
        return doc
    return _make


@pytest.fixture
def make_scenario(make_doc, tmp_path):
    def _make(**sections):
        doc = make_doc(**sections)
        doc.setdefault("outputs", {"dir": str(tmp_path / "results"), "name": "test"})
        return parse_scenario(json.dumps(doc))
    return _make
