import functools
from pathlib import Path

import pytest

from sdloops.pipeline import analyze_source

FIXTURES = Path(__file__).parent / "fixtures"

ALL_FIXTURES = sorted(p.name for p in FIXTURES.glob("*.sdm"))


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text()


@functools.lru_cache(maxsize=None)
def analyzed(name: str, overrides: tuple = (), **kwargs) -> dict:
    """Analysis bundle for a fixture, cached across tests."""
    return analyze_source(fixture_text(name), path_label=name,
                          overrides=dict(overrides), **kwargs)


@pytest.fixture
def figure5():
    return analyzed("figure5.sdm")


@pytest.fixture
def figure7():
    return analyzed("figure7.sdm")
