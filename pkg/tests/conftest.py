import math

import numpy as np
import pytest

from mhdlab._alloc import tune_allocator
from mhdlab.grid import Grid2D

tune_allocator()


@pytest.fixture
def grid2pi():
    """Unit-wavenumber box: 64^2 on [0, 2pi)^2."""
    return Grid2D(64, 64)


@pytest.fixture
def grid_box():
    """Localization-friendly box: 128^2 on [0, 12pi)^2 keeps a unit Gaussian's
    spectral tail below the 2/3-rule cutoff."""
    return Grid2D(128, 128, 12 * math.pi, 12 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
