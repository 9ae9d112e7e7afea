import warnings

import numpy as np
import pytest

from finsler_morse import geodesic as geo
from finsler_morse.metric import TangentVector, flat_torus, round_sphere

HALF_PI = np.pi / 2
EQ_P = (HALF_PI, 0.0)
EQ_Q = (HALF_PI, 1.0)


@pytest.fixture(scope="session", autouse=True)
def warm_compiled_kernels():
    """Compile the RK4 kernels once so timed tests measure the computation only."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        geo.solve_bvp(flat_torus(), (0.0, 0.0), (0.3, 0.4), 0.6, check_conjugacy=False)
        geo.solve_bvp(round_sphere(), EQ_P, EQ_Q, 1.5, check_conjugacy=False)


@pytest.fixture(scope="session")
def torus():
    return flat_torus()


@pytest.fixture(scope="session")
def sphere():
    return round_sphere()


@pytest.fixture(scope="session")
def equator(sphere):
    return geo.integrate_ivp(sphere, TangentVector(EQ_P, (0.0, 2 * np.pi)))


@pytest.fixture(scope="session")
def torus_loop(torus):
    """The (1, 0) closed geodesic of the unit square torus."""
    return geo.find_closed_geodesic(torus, (0.0, 0.0), (1.0, 0.0), (1.0, 0.0))


def sphere_arc(sphere, angle, steps=1000):
    return geo.integrate_ivp(sphere, TangentVector(EQ_P, (0.0, angle)), steps)
