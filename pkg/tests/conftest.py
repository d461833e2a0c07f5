import pytest

from updyn import catalog

# the two simulation demos are expensive enough to share across test modules
_cache = {}


def get_delay_demo():
    if "delay" not in _cache:
        _cache["delay"] = catalog.run_delay_demo()
    return _cache["delay"]


def get_discrete_demo():
    if "discrete" not in _cache:
        _cache["discrete"] = catalog.run_discrete_demo()
    return _cache["discrete"]


def get_sequence_demo():
    if "sequence" not in _cache:
        _cache["sequence"] = catalog.run_sequence_demo()
    return _cache["sequence"]


@pytest.fixture(scope="session")
def delay_demo():
    return get_delay_demo()


@pytest.fixture(scope="session")
def discrete_demo():
    return get_discrete_demo()


@pytest.fixture(scope="session")
def sequence_demo():
    return get_sequence_demo()
