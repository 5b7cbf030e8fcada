from pathlib import Path

import pytest

from cropcast.registry import load_manifest

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def registry():
    """The shipped fixture manifest, weather/geocoding forced offline."""
    return load_manifest(FIXTURES / "manifest.json", fixtures=True)


@pytest.fixture()
def client(registry):
    from fastapi.testclient import TestClient

    from cropcast.service import create_app

    return TestClient(create_app(registry))
