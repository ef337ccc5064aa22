import math

import pytest

from kantopt.game import builtin_game, cached_landmarks
from kantopt.rescale import Rescaling

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def lq():
    return builtin_game("linear-quadratic")


@pytest.fixture(scope="session")
def spg():
    return builtin_game("sqrt-public-good")


@pytest.fixture(scope="session")
def lq_efficient(lq):
    return Rescaling.affine(cached_landmarks(lq).x_nash)


@pytest.fixture(scope="session")
def spg_efficient(spg):
    return Rescaling.affine(cached_landmarks(spg).x_nash)


GOLDEN = (1 + math.sqrt(5)) / 2


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
