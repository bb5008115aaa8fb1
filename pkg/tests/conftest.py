import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from foilgen import aero, geometry


@pytest.fixture
def rng():
    return np.random.default_rng(20240911)


@pytest.fixture(scope="session")
def flow():
    return aero.FlowCondition(alpha=5.0)


@pytest.fixture(scope="session")
def naca2412():
    return geometry.naca4_profile(geometry.Naca4Params(0.02, 0.4, 0.12))


@pytest.fixture(scope="session")
def naca0012():
    return geometry.naca4_profile(geometry.Naca4Params(0.0, 0.0, 0.12))


@pytest.fixture(scope="session")
def jouk_default():
    params = geometry.JoukowskiParams(a=0.1, b=0.05, r=1.1)
    shape, ell, m = geometry.joukowski_airfoil(params)
    return params, shape, ell, m
