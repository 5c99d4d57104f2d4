import numpy as np
import pytest

from surrogate_tools import logger
from surrogate_tools.pde.grid import Grid1D


@pytest.fixture(autouse=True)
def console_logger():
    logger.setup(console_only=True, log_level=logger.LOG_WARNING)
    yield
    logger.destroy()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_grid():
    return Grid1D(n_x=32, length=1.0, n_t=4, dt=0.05)
