import numpy as np
import pytest

from decompound.grid import CircleGrid, GridFunction
from decompound.model import LevyDensity
from decompound.wavelets import WaveletBasis


@pytest.fixture(scope="session")
def grid():
    return CircleGrid(1024)


@pytest.fixture(scope="session")
def haar(grid):
    return WaveletBasis(grid, "haar")


@pytest.fixture(scope="session")
def db4(grid):
    return WaveletBasis(grid, "daubechies", 4)


@pytest.fixture(scope="session")
def both_bases(haar, db4):
    return {"haar": haar, "daubechies": db4}


def smooth_levy(grid, delta=1.0, lam=1.3, seed=None):
    """Deterministic smooth test density, optionally randomised by seed."""
    x = grid.points
    if seed is None:
        v = 0.4 * np.cos(2 * np.pi * x) + 0.25 * np.sin(4 * np.pi * x)
    else:
        rng = np.random.default_rng(seed)
        v = (
            rng.uniform(-0.5, 0.5) * np.cos(2 * np.pi * x + rng.uniform(0, 2 * np.pi))
            + rng.uniform(-0.3, 0.3) * np.sin(4 * np.pi * x + rng.uniform(0, 2 * np.pi))
        )
    vals = np.exp(v)
    vals *= lam / np.mean(vals)
    return LevyDensity(GridFunction(grid, vals), delta)


@pytest.fixture()
def nu_smooth(grid):
    return smooth_levy(grid)
