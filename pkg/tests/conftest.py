from pathlib import Path

import pytest

from obnox import create_app

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def app():
    return create_app({"TESTING": True, "CACHE_TYPE": "SimpleCache"})


@pytest.fixture
def client(app):
    return app.test_client()
