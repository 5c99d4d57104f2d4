import numpy as np
import pytest

from surrogate_tools.pde.advection import solve_advection
from surrogate_tools.pde.grid import Grid1D
from surrogate_tools.pde.initial import sample_initial_condition


def _nrmse(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_whole_cell_shifts_are_exact():
    grid = Grid1D(n_x=128, n_t=40, dt=0.05)
    u0 = sample_initial_condition(3, grid)
    traj = solve_advection(u0, 1.0, grid)
    assert traj.u.shape == (41, 1, 128)
    np.testing.assert_array_equal(traj.u[0, 0], u0)
    # t = 0.5: half a period
    np.testing.assert_array_equal(traj.u[10, 0], np.roll(u0, 64))
    # t = 1 and t = 2: full periods
    np.testing.assert_allclose(traj.u[20, 0], u0, atol=1e-14)
    np.testing.assert_allclose(traj.u[40, 0], u0, atol=1e-14)


@pytest.mark.parametrize('beta', [0.1, 0.7, 7.0])
def test_matches_closed_form(beta):
    grid = Grid1D(n_x=128, n_t=40, dt=0.05)

    def exact(t):
        x = grid.x - beta * t
        return np.sin(2 * np.pi * 3 * x) + 0.4 * np.cos(2 * np.pi * x + 0.3)

    traj = solve_advection(exact(0.0), beta, grid)
    assert traj.params.value == beta
    for k in range(grid.n_t + 1):
        assert _nrmse(traj.u[k, 0], exact(k * grid.dt)) < 1e-9
