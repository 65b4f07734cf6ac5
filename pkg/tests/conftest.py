import numpy as np
import pytest

from fracnehari import (
    NonlinearitySpec,
    SolverConfig,
    StatePair,
    make_asymptotic_potentials,
    make_grid,
    make_periodic_potentials,
    minimize_ground_state,
)
from fracnehari.functional import random_bumps

_CRITERIA: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    _CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)


DEFAULT_NL = (
    NonlinearitySpec(q=4.0, mu=3.0, theta=60.0, alpha0=1.0),
    NonlinearitySpec(q=4.0, mu=3.5, theta=60.0, alpha0=1.25),
)


@pytest.fixture(scope="session")
def grid():
    return make_grid(16.0, 1024)


@pytest.fixture(scope="session")
def pot(grid):
    return make_periodic_potentials(grid)


@pytest.fixture(scope="session")
def apot(grid, pot):
    return make_asymptotic_potentials(grid, pot)


@pytest.fixture(scope="session")
def nl():
    return DEFAULT_NL


@pytest.fixture(scope="session")
def ground(grid, pot, nl):
    return minimize_ground_state(grid, pot, nl, SolverConfig())


def random_states(grid, n, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return [StatePair.from_stacked(grid, scale * random_bumps(grid, rng)) for _ in range(n)]
