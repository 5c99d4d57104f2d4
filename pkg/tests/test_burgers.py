import numpy as np
import pytest

from surrogate_tools.decorators import ConfigError
from surrogate_tools.pde.burgers import solve_burgers
from surrogate_tools.pde.grid import Grid1D
from surrogate_tools.pde.initial import sample_initial_condition


def _nrmse(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def _cole_hopf_cell_averages(grid: Grid1D, eps: float, t: float, sub: int = 8, n_quad: int = 20001) -> np.ndarray:
    """ Exact viscous solution for u0 = sin(2 pi x), averaged over `sub` points per cell """
    offsets = (np.arange(sub) + 0.5) / sub - 0.5
    points = (grid.x[:, None] + offsets[None, :] * grid.dx).reshape(-1)
    values = np.empty_like(points)
    half_width = 0.25
    for idx, x in enumerate(points):
        y = np.linspace(x - half_width, x + half_width, n_quad)
        exponent = -(1.0 - np.cos(2 * np.pi * y)) / (4 * np.pi * eps) - (x - y) ** 2 / (4 * eps * t)
        weights = np.exp(exponent - exponent.max())
        values[idx] = np.sum((x - y) / t * weights) / np.sum(weights)
    return values.reshape(grid.n_x, sub).mean(axis=1)


def test_frames_and_mass_conservation():
    grid = Grid1D(n_x=32, n_t=5, dt=0.05)
    u0 = sample_initial_condition(11, grid)
    traj = solve_burgers(u0, 0.1, grid, oversample=4)
    assert traj.u.shape == (6, 1, 32)
    np.testing.assert_array_equal(traj.u[0, 0], u0)
    mass = traj.u[:, 0].sum(axis=-1) * grid.dx
    np.testing.assert_allclose(mass, mass[0], atol=1e-8)


def test_strong_diffusion_decays_single_mode():
    grid = Grid1D(n_x=32, n_t=5, dt=0.05)
    amplitude = 1e-3
    u0 = amplitude * np.sin(2 * np.pi * grid.x)
    traj = solve_burgers(u0, 2.0, grid, oversample=4)
    eps = 2.0 / np.pi
    basis = np.sin(2 * np.pi * grid.x)
    for k in range(1, grid.n_t + 1):
        measured = 2.0 / grid.n_x * np.dot(traj.u[k, 0], basis)
        expected = amplitude * np.exp(-eps * (2 * np.pi) ** 2 * k * grid.dt)
        assert measured == pytest.approx(expected, rel=1e-2)


def test_matches_cole_hopf_before_shock():
    nu = 0.002
    grid = Grid1D(n_x=128, n_t=2, dt=0.05)
    traj = solve_burgers(np.sin(2 * np.pi * grid.x), nu, grid)
    exact = _cole_hopf_cell_averages(grid, nu / np.pi, 0.1)
    assert _nrmse(traj.u[2, 0], exact) < 5e-3


def test_grid_convergence():
    grid = Grid1D(n_x=64, n_t=4, dt=0.05)
    u0 = sample_initial_condition(4, grid)
    coarse = solve_burgers(u0, 0.1, grid, oversample=8).u
    fine = solve_burgers(u0, 0.1, grid, oversample=16).u
    for k in range(1, grid.n_t + 1):
        assert _nrmse(coarse[k], fine[k]) < 1e-3


def test_substep_guard():
    grid = Grid1D(n_x=128, n_t=40, dt=0.05)
    u0 = sample_initial_condition(0, grid) * 1e5
    with pytest.raises(ConfigError):
        solve_burgers(u0, 0.01, grid)


def test_vanishing_step_keeps_cell_averages():
    # frame 0 and the box average of the refined field describe the same cell averages
    grid = Grid1D(n_x=64, n_t=1, dt=1e-14)
    u0 = sample_initial_condition(7, grid)
    traj = solve_burgers(u0, 0.01, grid)
    assert _nrmse(traj.u[1, 0], u0) < 1e-12
