import math

import pytest

from collapse_lab.quantum_core import ModelParams, ProbeState, make_superposition

R = 1 / math.sqrt(2)


@pytest.fixture
def params():
    return ModelParams(lam=1.0, a=1.0, b=-1.0, dt=0.01)


@pytest.fixture
def equal_state():
    return make_superposition(1, 1)


@pytest.fixture
def equal_probe():
    return ProbeState(R, R)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
