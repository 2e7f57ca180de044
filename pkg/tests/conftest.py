import os

import pytest

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


@pytest.fixture
def fixture_path():
    def path(name: str) -> str:
        return os.path.join(FIXTURES, name)
    return path


@pytest.fixture
def fixture_text(fixture_path):
    def text(name: str) -> str:
        with open(fixture_path(name), encoding="utf-8") as handle:
            return handle.read()
    return text
