from pathlib import Path

import pytest

from wvn.closed_set import load

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_set(name):
    return load(FIXTURES / f"{name}.json")


@pytest.fixture
def fixture_dir():
    return FIXTURES


# acceptance criteria report one PASS/FAIL line each; they are collected here
# and printed in the terminal summary so they show up without -s
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
