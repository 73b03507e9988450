import pytest

from payoffopt import MarketParams


@pytest.fixture(scope="session")
def params():
    # standard parameter set used throughout: mu=0.06, r=0.02, sigma=0.3,
    # S0=100, T=1
    return MarketParams(mu=0.06, r=0.02, sigma=0.3, s0=100.0, t_mat=1.0)
