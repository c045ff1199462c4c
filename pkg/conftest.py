"""
Root conftest.py for the sigcode test suite: markers and seeded generators.
"""

import numpy as np
import pytest


def pytest_configure(config):
    """Register custom markers"""
    config.addinivalue_line(
        "markers",
        "slow: Tests that take longer than average to run (acceptance-scale Monte Carlo)"
    )


@pytest.fixture
def rng():
    """Fresh seeded generator per test"""
    return np.random.default_rng(20240601)


@pytest.fixture
def rng_factory():
    """Build independent seeded generators inside one test"""
    def make(seed: int = 0) -> np.random.Generator:
        return np.random.default_rng(seed)
    return make
