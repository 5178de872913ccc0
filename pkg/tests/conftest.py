import numpy as np
import pytest

from degob import catalog, claims
from degob.grid import GridSpec


@pytest.fixture(scope="session")
def ustar_128():
    return claims.ustar_solve(128)


@pytest.fixture(scope="session")
def ustar_256():
    return claims.ustar_solve(256)


@pytest.fixture(scope="session")
def ustar_512():
    return claims.ustar_solve(512)


@pytest.fixture(scope="session")
def ustar_sampled_512():
    return catalog.sample_field(catalog.u_star(), GridSpec(512))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
