import math
import warnings

import pytest

from gapverify.eigen import smallest_eigenpairs
from gapverify.geometry import DomainSpec, build_grid
from gapverify.operator import Potential, assemble_dirichlet

PI2 = math.pi ** 2


def solve(spec, h, q=None, k=3):
    return smallest_eigenpairs(assemble_dirichlet(build_grid(spec, h), q), k)


@pytest.fixture(scope="session")
def interval():
    return DomainSpec.interval(-0.5, 0.5)


@pytest.fixture(scope="session")
def square():
    return DomainSpec.rectangle(1.0, 1.0)


@pytest.fixture(scope="session")
def interval_512(interval):
    return solve(interval, 1 / 512)


@pytest.fixture(scope="session")
def interval_1024(interval):
    return solve(interval, 1 / 1024)


@pytest.fixture(scope="session")
def square_64(square):
    return solve(square, 1 / 64)


@pytest.fixture(scope="session")
def square_128(square):
    return solve(square, 1 / 128)


@pytest.fixture(scope="session")
def square_quadratic_64(square):
    return solve(square, 1 / 64, Potential.radial(4.0, [0.5, 0.5]))


@pytest.fixture(autouse=True)
def _quiet_truncation():
    from gapverify.errors import TruncationUnderflow
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationUnderflow)
        yield


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
