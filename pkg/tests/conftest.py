import time

import numpy as np
import pytest

from drcbf import UncertaintyModel, load_config, monte_carlo


@pytest.fixture(scope="session")
def default_scenario():
    return load_config()


@pytest.fixture(scope="session")
def robust_run(default_scenario):
    """Robust Monte Carlo statistics and the wall time they took."""
    t0 = time.perf_counter()
    stats = monte_carlo(default_scenario.replace(filter="reach"), 100)
    return stats, time.perf_counter() - t0


@pytest.fixture(scope="session")
def robust_stats(robust_run):
    return robust_run[0]


@pytest.fixture(scope="session")
def vanilla_stats(default_scenario):
    return monte_carlo(default_scenario.replace(filter="vanilla"), 100)


@pytest.fixture(scope="session")
def vanilla_clean_stats(default_scenario):
    clean = default_scenario.replace(filter="vanilla", uncertainty=UncertaintyModel.zero(4, 2))
    return monte_carlo(clean, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
