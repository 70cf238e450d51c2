import numpy as np
import pytest

from climecon.params import ParamSet, InitialConditions


@pytest.fixture(scope="session")
def params() -> ParamSet:
    return ParamSet()


@pytest.fixture(scope="session")
def initial() -> InitialConditions:
    return InitialConditions()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20160101)
