import sys
from functools import lru_cache
from importlib import resources

import pytest

from prfteam import prf, synthesis


@lru_cache(maxsize=None)
def library_env() -> dict:
    text = (resources.files("prfteam") / "data" / "library.prf").read_text()
    env, _ = prf.parse_program(text)
    return env


@lru_cache(maxsize=None)
def plan_for(text: str) -> synthesis.SynthPlan:
    return synthesis.compile(prf.parse_prf(text, library_env()))


@pytest.fixture(scope="session")
def lib():
    return library_env()


@pytest.fixture(scope="session")
def plan():
    return plan_for


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance")
        for line in sorted(mod.LINES, key=lambda x: int(x.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
