from __future__ import annotations

from pathlib import Path

import pytest

from pppm.dsl import load_policy

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def read_fixture(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def shop_text() -> str:
    return read_fixture("imaginary_shop.pppm")


@pytest.fixture(scope="session")
def baby_text() -> str:
    return read_fixture("chatterbaby.pppm")


@pytest.fixture(scope="session")
def shop_model(shop_text):
    return load_policy(shop_text)


@pytest.fixture(scope="session")
def baby_model(baby_text):
    return load_policy(baby_text)
