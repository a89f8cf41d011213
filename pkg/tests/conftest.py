import numpy as np
import pytest

from fractrace.dset import build_dset, four_corner_cantor, vicsek_cross
from fractrace.geometry import Cube, dyadic_hull


@pytest.fixture(scope="session")
def cantor4():
    return build_dset(four_corner_cantor(4))


@pytest.fixture(scope="session")
def cantor5():
    return build_dset(four_corner_cantor(5))


@pytest.fixture(scope="session")
def cantor6():
    return build_dset(four_corner_cantor(6))


@pytest.fixture(scope="session")
def koch_like():
    # translation-only stand-in with d = log5/log3 in (1, 2)
    return build_dset(vicsek_cross(3))


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def region5(cantor5):
    return dyadic_hull(cantor5.bounding, margin=1.0)
