from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tauindep import ObservedMatrix

FIXTURES = Path(__file__).parent / "fixtures"


@st.composite
def observed_matrices(draw, min_n=2, max_n=9, min_d=2, max_d=5, ties=True):
    """Small matrices with random masks; ``ties`` draws from a coarse grid."""
    n = draw(st.integers(min_n, max_n))
    d = draw(st.integers(min_d, max_d))
    if ties:
        elems = st.integers(-3, 3).map(float)
    else:
        elems = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
    values = draw(arrays(np.float64, (n, d), elements=elems))
    mask = draw(arrays(np.int8, (n, d), elements=st.sampled_from([0, 1, 1])))
    return ObservedMatrix(values, mask)


def random_matrix(rng, n, d, p_obs=0.8):
    x = rng.standard_normal((n, d))
    return ObservedMatrix(x, (rng.random((n, d)) < p_obs).astype(np.int8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --- acceptance reporting ----------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
