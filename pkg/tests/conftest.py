import sys
from pathlib import Path

import pytest

import looppragma as lp

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str) -> lp.LoopTree:
    path = FIXTURES / name
    return lp.load(path.read_text(), file=path.name)


def transformed(name: str) -> lp.ApplyResult:
    return lp.apply_all(load_fixture(name))


@pytest.fixture
def fixture_tree():
    return load_fixture


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
