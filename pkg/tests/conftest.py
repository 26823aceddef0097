from __future__ import annotations

import json
from pathlib import Path

import pytest

FIXTURES_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture(scope="session")
def manifest() -> dict:
    with open(FIXTURES_DIR / "manifest.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def fixture_texts(manifest) -> dict[str, str]:
    """Fixture name -> captured stderr text."""
    texts = {}
    for entry in manifest["fixtures"]:
        path = FIXTURES_DIR / entry["stderr_file"]
        texts[entry["name"]] = path.read_text(encoding="utf-8")
    return texts


@pytest.fixture
def state_dir(tmp_path) -> Path:
    return tmp_path / "state"
