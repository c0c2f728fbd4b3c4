import pytest
import valuecast as vc
from valuecast import market_models
from valuecast.data import synth_generate


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")


@pytest.fixture
def toy_a():
    return market_models.toy_a()


@pytest.fixture
def toy_ample(toy_a):
    """TOY-A with flexible capacities covering any deviation"""
    return toy_a.replace(up_cap=[40], down_cap=[40])


@pytest.fixture
def toy_uc():
    return market_models.toy_uc()


@pytest.fixture
def synth():
    return market_models.synth_market()


@pytest.fixture(scope="session")
def synth_days():
    return synth_generate(seed=7, days=10)


@pytest.fixture
def refactor_often():
    with vc.config(solver__refactor_interval=3):
        yield vc.config
