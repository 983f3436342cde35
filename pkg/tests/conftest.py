import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from demem.core import RewardTable

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TOL = 1e-12
EXAMPLE = [[1.0, 0.8], [0.7, 1.0]]


@pytest.fixture
def example_table():
    return RewardTable(EXAMPLE)


@st.composite
def reward_tables(draw, n_max=6, a_max=4, n_min=1, grid=None):
    """Tables whose entries are either on a 0.1 grid (ties) or arbitrary floats in [0, 1]."""
    n = draw(st.integers(n_min, n_max))
    a = draw(st.integers(1, a_max))
    on_grid = draw(st.booleans()) if grid is None else grid
    if on_grid:
        cells = st.integers(0, 10).map(lambda v: v / 10.0)
    else:
        cells = st.floats(0.0, 1.0, allow_nan=False)
    vals = draw(st.lists(st.lists(cells, min_size=a, max_size=a), min_size=n, max_size=n))
    return RewardTable(np.array(vals))


@st.composite
def tables_with_partition(draw, n_max=6, a_max=4, k_max=4):
    mu = draw(reward_tables(n_max=n_max, a_max=a_max))
    k = draw(st.integers(1, k_max))
    labels = draw(st.lists(st.integers(0, k - 1), min_size=mu.n, max_size=mu.n))
    return mu, k, tuple(labels)
