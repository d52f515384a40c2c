import numpy as np
import pytest

from phasequant.core import ModelParams, PhaseGrid, PositionGrid
from phasequant.states import random_corpus

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def unit():
    return ModelParams(h=1.0, a=1.0, b=1.0)


@pytest.fixture(scope="session")
def grid():
    return PositionGrid.centered(10.0, 256)


@pytest.fixture(scope="session")
def small_grid():
    return PositionGrid.centered(8.0, 128)


@pytest.fixture(scope="session")
def phase_grid(grid, unit):
    return PhaseGrid.from_position(grid, unit)


@pytest.fixture(scope="session")
def small_phase_grid(small_grid, unit):
    return PhaseGrid.from_position(small_grid, unit)


@pytest.fixture(scope="session")
def corpus(grid):
    return random_corpus(grid, count=20, seed=12345)


@pytest.fixture(scope="session")
def small_corpus(small_grid):
    return random_corpus(small_grid, count=6, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
