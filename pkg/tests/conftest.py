import numpy as np
import pytest

import solispec as sp


@pytest.fixture(scope="session")
def nl_cubic():
    return sp.Nonlinearity.power(1.0)


@pytest.fixture(scope="session")
def gs_cubic(nl_cubic):
    """Default-resolution cubic ground state at mu = 1 (the sech oracle)."""
    return sp.solve_ground_state(nl_cubic, 1.0)


@pytest.fixture(scope="session")
def pm_cubic(gs_cubic, nl_cubic):
    return sp.potential_V(gs_cubic, nl_cubic)


@pytest.fixture(scope="session")
def gs_cubic_coarse(nl_cubic):
    """Coarse cubic profile for dense eigensolves (801 grid points)."""
    return sp.solve_ground_state(nl_cubic, 1.0, R=12.0, h=0.03, tol=1e-9)


@pytest.fixture(scope="session")
def jost_cubic_2(gs_cubic, nl_cubic):
    """Decaying solution at lambda = 2 over the cubic profile."""
    return sp.decaying_solution(2.0, gs_cubic, nl_cubic)


def sech_profile(x):
    return np.sqrt(2.0) / np.cosh(x)
