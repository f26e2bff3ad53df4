import pytest

from shift_scenery.bundled import (
    bernoulli_07,
    block_gibbs_log_mstar,
    block_gibbs_range3,
    block_gibbs_zero,
    markov_mstar,
    mixture_two_bernoullis,
)


@pytest.fixture(scope="session")
def mstar():
    return markov_mstar()


@pytest.fixture(scope="session")
def bern07():
    return bernoulli_07()


@pytest.fixture(scope="session")
def bg_log_mstar():
    return block_gibbs_log_mstar()


@pytest.fixture(scope="session")
def bg_zero():
    return block_gibbs_zero()


@pytest.fixture(scope="session")
def bg_r3():
    return block_gibbs_range3()


@pytest.fixture(scope="session")
def mixture():
    return mixture_two_bernoullis()


@pytest.fixture(scope="session")
def bundle(bern07, mstar, bg_log_mstar, bg_zero, bg_r3, mixture):
    return {
        "bernoulli_07": bern07,
        "markov_mstar": mstar,
        "block_gibbs_log_mstar": bg_log_mstar,
        "block_gibbs_zero": bg_zero,
        "block_gibbs_range3": bg_r3,
        "mixture_two_bernoullis": mixture,
    }
