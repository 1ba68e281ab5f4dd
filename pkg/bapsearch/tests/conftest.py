from __future__ import annotations

import numpy as np
import pytest

from app.services.graph_core import MixedGraph


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run the long acceptance tests')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


def make_graph(d, directed=(), bidirected=()):
    return MixedGraph(d, frozenset(directed), frozenset(bidirected))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def confounded_chain():
    # 0 -> 1 -> 2 -> 3 with 1 <-> 3: districts {0}, {1, 3}, {2}
    return make_graph(4, [(0, 1), (1, 2), (2, 3)], [(1, 3)])


@pytest.fixture
def bow():
    # Directed edge and bidirected edge on the same pair: acyclic, not bow-free.
    return make_graph(4, [(0, 1), (1, 3)], [(1, 3)])


@pytest.fixture
def single_district():
    return make_graph(4, [(0, 2), (3, 1)], [(0, 1), (0, 3), (2, 3)])


@pytest.fixture
def split_districts():
    return make_graph(4, [(0, 2), (0, 3), (3, 1)], [(0, 1), (2, 3)])


@pytest.fixture
def single_district_extra():
    return make_graph(4, [(0, 2), (3, 1)], [(0, 1), (0, 3), (2, 3), (1, 2)])


@pytest.fixture
def hard_pair():
    """Two BAPs known to be non-equivalent that the necessary conditions cannot tell apart."""
    first = make_graph(4, [(1, 2), (2, 3), (2, 0)], [(0, 1), (1, 3)])
    second = make_graph(4, [(1, 2), (2, 3), (0, 2)], [(0, 1), (1, 3)])
    return first, second
