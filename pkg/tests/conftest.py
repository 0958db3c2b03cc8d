import pytest

from quasiprob.filter import build_filter_profile
from quasiprob.gaussian_sim import simulate_quadratures
from quasiprob.models import GaussianStateSpec, PhaseGrid
from quasiprob.pattern import build_chi_table, build_dense_chi

SQUEEZED = GaussianStateSpec(v_x=0.36, v_p=5.28)
VACUUM = GaussianStateSpec.vacuum()


@pytest.fixture(scope="session")
def squeezed():
    return SQUEEZED


@pytest.fixture(scope="session")
def vacuum():
    return VACUUM


@pytest.fixture(scope="session")
def profile13():
    return build_filter_profile(1.3)


@pytest.fixture(scope="session")
def table13(profile13):
    return build_chi_table(profile13)


@pytest.fixture(scope="session")
def dense13(table13):
    return build_dense_chi(table13)


@pytest.fixture(scope="session")
def grid21():
    return PhaseGrid.uniform(21)


@pytest.fixture(scope="session")
def squeezed_data(grid21):
    return simulate_quadratures(SQUEEZED, grid21, 20000, seed=11)


@pytest.fixture(scope="session")
def vacuum_data(grid21):
    return simulate_quadratures(VACUUM, grid21, 20000, seed=12)
