"""Test configuration for pytest."""

from pathlib import Path

import numpy as np
import pytest

from quatergcn.core.config import Config, set_config
from quatergcn.core.graph import Digraph

FOUR_NODE_ADJACENCY = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 3.0],
        [3.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 5.0, 0.0],
    ]
)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run end-to-end training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def test_config():
    """Create test configuration."""
    config = Config(log_level="debug", workers=1)
    set_config(config)
    return config


@pytest.fixture
def four_node():
    """The four-node worked example with one symmetric and two asymmetric digons."""
    return Digraph(FOUR_NODE_ADJACENCY)


@pytest.fixture
def four_node_path(tmp_path) -> Path:
    path = tmp_path / "four_node.tsv"
    path.write_text((Path(__file__).parent.parent / "configs" / "four_node.tsv").read_text())
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
