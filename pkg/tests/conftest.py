# tests/conftest.py
from __future__ import annotations

import pytest

from common.settings import RunConfig, get_settings, set_settings
from geometry.construct import make_twist


@pytest.fixture(autouse=True)
def run_config(monkeypatch):
    for key in ("NONDEG_CONFIG", "NONDEG_REGISTRY_PATH"):
        monkeypatch.delenv(key, raising=False)
    prev = set_settings(RunConfig())
    yield get_settings()
    set_settings(prev)


@pytest.fixture(scope="session")
def twist2():
    return make_twist(2)


@pytest.fixture(scope="session")
def twist3():
    return make_twist(3)
