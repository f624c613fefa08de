import logging
import math

import numpy as np
import pytest

from qmonitor.qubit import PureState

TR = 2 * math.pi
TILTED_DIRECTION = (0.43, 0.0, 0.9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _quiet_direction_warning(caplog):
    caplog.set_level(logging.ERROR, logger="qmonitor.povm")


def random_states(rng, n):
    return [PureState.haar_random(rng) for _ in range(n)]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda x: int(x.split()[1])):
            terminalreporter.write_line(line)
