import warnings

import numpy as np
import pytest

from henonlab import henon, fatou

warnings.filterwarnings("ignore", category=RuntimeWarning)


@pytest.fixture(scope="session")
def map05():
    return henon.semi_parabolic_map(0.5)


@pytest.fixture(scope="session")
def chart05(map05):
    return henon.local_chart(map05)


@pytest.fixture(scope="session")
def ev05(map05):
    return fatou.make_evaluator(map05)


@pytest.fixture(scope="session")
def basin_points(ev05):
    """100 deterministic points well inside the parabolic basin."""
    rng = np.random.default_rng(0)
    n = 100
    zeta0 = -(0.03 + 0.05 * rng.random(n)) * np.exp(1j * 0.5 * (rng.random(n) - 0.5))
    mu0 = 0.03 * (rng.random(n) - 0.5 + 1j * (rng.random(n) - 0.5))
    return ev05.chart.inverse_many(zeta0, mu0)
