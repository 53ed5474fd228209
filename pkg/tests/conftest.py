import pytest

from iotssa.scenario import builtin_fixtures

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def fixtures():
    return builtin_fixtures()


@pytest.fixture(scope="session")
def scenario_1(fixtures):
    return fixtures[0]


@pytest.fixture(scope="session")
def scenario_2(fixtures):
    return fixtures[1]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
