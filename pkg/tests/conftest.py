import random

import pytest

from duabe.scheme import global_setup

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def gp():
    return global_setup(128)


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
