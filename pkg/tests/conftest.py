import numpy as np
import pytest

from logic.notions import compile_region
from logic.primes import primes_in
from utils import load_config


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run acceptance-scale cases')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def config():
    return load_config()


def enumerate_pairs(spec, x):
    # Every ordered prime pair of the region, by testing all pairs with pq <= x
    region = compile_region(spec, x)
    primes = primes_in(2, int(x) // 2).tolist()
    return [(p, q) for p in primes for q in primes
            if p * q <= x and region.contains(p, q)]


@pytest.fixture
def pair_oracle():
    return enumerate_pairs
