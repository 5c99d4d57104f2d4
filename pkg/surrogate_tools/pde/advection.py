import numpy as np

from surrogate_tools.pde.grid import ADVECTION, Grid1D, PdeParams, Trajectory
from surrogate_tools.pde.initial import spectral_shift

# shifts closer than this (in cells) to an integer are applied as exact rolls
INTEGER_SHIFT_TOL = 1e-9


def solve_advection(u0: np.ndarray, beta: float, grid: Grid1D) -> Trajectory:
    """
    Exact solution u(t, x) = u0(x - beta * t) of  u_t + beta * u_x = 0  on the periodic grid.
    Frame k is u0 shifted by beta * k * dt: integer cell shifts are rolled, others phase-shifted in Fourier space
    """
    params = PdeParams(ADVECTION, float(beta))
    u0 = np.asarray(u0, dtype=np.float64)
    frames = np.empty((grid.n_t + 1, 1, grid.n_x))
    frames[0, 0] = u0
    for k in range(1, grid.n_t + 1):
        cells = (params.value * k * grid.dt % grid.length) / grid.dx
        whole = int(round(cells))
        if abs(cells - whole) < INTEGER_SHIFT_TOL:
            frames[k, 0] = np.roll(u0, whole)
        else:
            frames[k, 0] = spectral_shift(u0, cells)
    return Trajectory(grid, params, frames)
