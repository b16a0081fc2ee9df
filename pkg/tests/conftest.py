from __future__ import annotations

import copy
import json
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def fixture_text() -> str:
    return (DATA_DIR / "writing_refiner.json").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def fixture_obj(fixture_text) -> dict:
    return json.loads(fixture_text)


@pytest.fixture
def mutable_obj(fixture_obj) -> dict:
    """Deep copy of the golden record, safe to mutate per test."""
    return copy.deepcopy(fixture_obj)


@pytest.fixture(scope="session")
def fixture_doc(fixture_text):
    from sslkit import parse_document

    return parse_document(fixture_text)
