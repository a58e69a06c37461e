import pytest

from diffdrive.params import RobotParams, lump_params
from diffdrive.scenario import load_scenario, shipped_scenarios

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def robot():
    return RobotParams()


@pytest.fixture(scope="session")
def lp(robot):
    return lump_params(robot)


@pytest.fixture(scope="session")
def shipped():
    return {name: load_scenario(path) for name, path in shipped_scenarios().items()}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
