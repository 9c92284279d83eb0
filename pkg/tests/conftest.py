import numpy as np
import pytest
from hypothesis import strategies as st

from gpmemory.kernels import ExpSumKernel


def _separated(gammas, rel=1e-2):
    g = sorted(gammas)
    return all(b - a > rel * b for a, b in zip(g, g[1:]))


@st.composite
def expsum_kernels(draw, max_terms=6, c_range=(0.05, 10.0), g_range=(0.05, 20.0)):
    n = draw(st.integers(1, max_terms))
    gammas = draw(
        st.lists(st.floats(*g_range, allow_nan=False), min_size=n, max_size=n).filter(_separated)
    )
    cs = draw(st.lists(st.floats(*c_range, allow_nan=False), min_size=n, max_size=n))
    return ExpSumKernel(tuple(zip(cs, gammas)))


def random_expsum(rng, max_terms=6, c_range=(0.05, 10.0), g_range=(0.05, 20.0)):
    while True:
        n = int(rng.integers(1, max_terms + 1))
        g = rng.uniform(*g_range, n)
        if _separated(g):
            return ExpSumKernel(tuple(zip(rng.uniform(*c_range, n), g)))


@pytest.fixture
def two_term():
    return ExpSumKernel(((1.0, 1.0), (1.0, 2.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
