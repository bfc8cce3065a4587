from pathlib import Path

import pytest

from spectrum_forge.driver import mock_driver

FIXTURE_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def driver():
    return mock_driver(timeout=30.0)


def fixture_text(name: str) -> str:
    return (FIXTURE_DIR / name).read_text(encoding="utf-8")
