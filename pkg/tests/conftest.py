import numpy as np
import pytest

from elastoshape.geometry import Curve, PerturbationField, sample_grid
from elastoshape.kernels import LamePair
from elastoshape.polynomial import PolynomialField
from elastoshape.solver import TransmissionProblem, solve_base

SOFT = LamePair(1.0, 1.0)
STIFF = LamePair(3.0, 2.0)
EPSILONS = [0.08, 0.04, 0.02, 0.01]


def slope(eps, values):
    return float(np.polyfit(np.log(eps), np.log(values), 1)[0])


def smooth_density(grid):
    t = grid.t
    return np.stack([np.cos(t) + 0.3 * np.sin(2 * t), np.sin(3 * t) + 0.2], axis=1)


@pytest.fixture(scope="session")
def kite256():
    return sample_grid(Curve.kite(), 256)


@pytest.fixture(scope="session")
def h2():
    return PerturbationField.mode(2)


@pytest.fixture(scope="session")
def kite_problem(kite256):
    return TransmissionProblem(kite256, SOFT, STIFF, PolynomialField.linear_shear())


@pytest.fixture(scope="session")
def kite_base(kite_problem):
    return solve_base(kite_problem)


ACCEPTANCE_LINES = []


def record(criterion, title, ok, detail):
    line = f"criterion {criterion:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
