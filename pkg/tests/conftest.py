import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hadamard import align_grid, default_grid, grid_from_window, sample

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("default")


def log_bump(center=0.0, width=0.4):
    """``exp(-(log|x| - c)^2 / 2w^2)`` on physical coordinates, any dimension."""
    def f(*x):
        return np.exp(-sum((np.log(np.abs(xj)) - center) ** 2 for xj in x) / (2 * width ** 2))
    return f


@pytest.fixture(scope="session")
def grid1():
    return default_grid(1)


@pytest.fixture(scope="session")
def grid1_small():
    return grid_from_window(1, -6.0, 6.0, 256)


@pytest.fixture(scope="session")
def grid2():
    return default_grid(2)


@pytest.fixture(scope="session")
def aligned1():
    return align_grid(default_grid(1))


@pytest.fixture(scope="session")
def aligned2():
    return align_grid(default_grid(2))


@pytest.fixture
def bump1(grid1):
    return sample(log_bump(0.1, 0.4), grid1)


def rel(a, b):
    return abs(a - b) / (1.0 + abs(b))


__all__ = ["log_bump", "rel", "math"]


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
