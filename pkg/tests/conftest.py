import numpy as np
import pytest

from areabound.domain import PlanarDomain
from areabound.integrands import AreaIntegrand
from areabound.solver import solve_dirichlet, solve_minimal_system

SCHERK = "log(cos(x)/cos(y))"
Z2 = "x**2 - y**2, 2*x*y"
Z3 = "x**3 - 3*x*y**2, 3*x**2*y - y**3"


def scherk_height(x, y):
    return np.log(np.cos(x) / np.cos(y))


@pytest.fixture(scope="session")
def disc65():
    return PlanarDomain.unit_disc(65)


@pytest.fixture(scope="session")
def square65():
    return PlanarDomain.unit_square(65)


@pytest.fixture(scope="session")
def xy_solution(square65):
    return solve_dirichlet(square65, AreaIntegrand(1), None, "x*y")


@pytest.fixture(scope="session")
def z2_solution():
    return solve_minimal_system(PlanarDomain.unit_disc(129), 2, Z2)


@pytest.fixture(scope="session")
def scherk_solution():
    d = PlanarDomain.rectangle(-0.8, 0.8, -0.8, 0.8, 129)
    return solve_dirichlet(d, AreaIntegrand(1), None, SCHERK)


@pytest.fixture(scope="session")
def cap_solutions(disc65):
    """Prescribed mean curvature H = 0.1 and H = 0.2 with zero boundary values."""
    return {h: solve_dirichlet(disc65, AreaIntegrand(1), 2.0 * h, "0") for h in (0.1, 0.2)}
