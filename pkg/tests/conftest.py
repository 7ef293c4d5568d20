import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from slconv.forward import eigenvalues
from slconv.numgrid import Grid, SampledFunction


def sample(grid, f, singular_end=False):
    return SampledFunction.from_callable(grid, f, singular_end=singular_end)


def cos_pair(n):
    g = Grid(n)
    return g, sample(g, np.cos), sample(g, lambda x: 0.2 * np.cos(x))


@pytest.fixture(scope="session")
def cos_data_400():
    """(grid, q, M, spectrum with K = 40) for q = cos x, M = 0.2 cos x."""
    g, q, M = cos_pair(400)
    return g, q, M, eigenvalues(q, M, 40)
