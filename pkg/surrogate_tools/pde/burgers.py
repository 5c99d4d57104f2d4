"""
Reference solver of the viscous Burgers equation  u_t + (u^2 / 2)_x = (nu / pi) u_xx  on a periodic domain.

The field is advanced on an `oversample`-times finer grid: MUSCL (minmod) reconstruction,
local Lax-Friedrichs interface flux, SSP-RK2 stepping. Diffusion uses the central second
difference; it is integrated inside the RK2 stages while its explicit limit is not the binding one,
otherwise it is Strang-split and advanced exactly in Fourier space with the eigenvalues of the
same difference operator. Frames are cell averages: the initial field is refined so that its box
average is the given u0, later frames are box averages of the fine field.
"""
import math

import numpy as np

from surrogate_tools.decorators import ConfigError
from surrogate_tools.pde.grid import BURGERS, Grid1D, PdeParams, Trajectory
from surrogate_tools.pde.initial import box_average, refine_cell_averages
from surrogate_tools.spectral import irfft, rfft

OVERSAMPLE = 8
CFL = 0.4
MAX_SUBSTEPS = 10 ** 7
# floor of max|u| in the advective limit, keeps dt finite for vanishing fields
MIN_SPEED = 1e-12


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def _flux_divergence(u: np.ndarray, dx: float) -> np.ndarray:
    """ (F_{j+1/2} - F_{j-1/2}) / dx of the LLF flux on MUSCL states """
    u_next = np.roll(u, -1)
    slope = _minmod(u - np.roll(u, 1), u_next - u)
    left = u + 0.5 * slope
    right = u_next - 0.5 * np.roll(slope, -1)
    speed = np.maximum(np.abs(left), np.abs(right))
    flux = 0.25 * (left * left + right * right) - 0.5 * speed * (right - left)
    return (flux - np.roll(flux, 1)) / dx


def _laplacian(u: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / (dx * dx)


class _BurgersStepper:
    def __init__(self, eps: float, dx: float, n_fine: int, cfl: float):
        self.eps = eps
        self.dx = dx
        self.cfl = cfl
        self.dt_diffusion = cfl * dx * dx / (2.0 * eps)
        # eigenvalues of the periodic central second difference
        self.eigen = -4.0 / (dx * dx) * np.sin(np.pi * np.arange(n_fine // 2 + 1) / n_fine) ** 2
        self.n_fine = n_fine

    def plan(self, speed: float, interval: float):
        """ (substep count, explicit diffusion flag) for one stored interval at max|u| = speed """
        dt_advection = self.cfl * self.dx / max(speed, MIN_SPEED)
        explicit = self.dt_diffusion >= dt_advection
        limit = min(dt_advection, self.dt_diffusion) if explicit else dt_advection
        return max(1, math.ceil(interval / limit - 1e-9)), explicit

    def _rhs(self, u: np.ndarray, explicit: bool) -> np.ndarray:
        rhs = -_flux_divergence(u, self.dx)
        if explicit:
            rhs += self.eps * _laplacian(u, self.dx)
        return rhs

    def _rk2(self, u: np.ndarray, h: float, explicit: bool) -> np.ndarray:
        stage = u + h * self._rhs(u, explicit)
        return 0.5 * (u + stage + h * self._rhs(stage, explicit))

    def _diffuse(self, u: np.ndarray, h: float) -> np.ndarray:
        return irfft(rfft(u) * np.exp(self.eps * self.eigen * h), self.n_fine)

    def advance(self, u: np.ndarray, interval: float) -> np.ndarray:
        n_sub, explicit = self.plan(float(np.max(np.abs(u))), interval)
        h = interval / n_sub
        for _ in range(n_sub):
            if explicit:
                u = self._rk2(u, h, True)
            else:
                u = self._diffuse(self._rk2(self._diffuse(u, 0.5 * h), h, False), 0.5 * h)
        return u


def solve_burgers(
        u0: np.ndarray, nu: float, grid: Grid1D, oversample: int = OVERSAMPLE, cfl: float = CFL,
        max_substeps: int = MAX_SUBSTEPS) -> Trajectory:
    """
    :param u0: initial cell averages (n_x, ); stored unchanged as frame 0 and refined so that the box
        average of the fine field reproduces it
    :param nu: diffusion coefficient as stored in datasets; the equation uses nu / pi
    :param oversample: fine-grid refinement factor (power of two)
    :raise ConfigError: when the whole trajectory would need more than `max_substeps` substeps
    """
    params = PdeParams(BURGERS, float(nu))
    u0 = np.asarray(u0, dtype=np.float64)
    n_fine = grid.n_x * oversample
    stepper = _BurgersStepper(params.value / np.pi, grid.length / n_fine, n_fine, cfl)

    u_fine = refine_cell_averages(u0, n_fine)
    # max|u| does not grow, so the first interval bounds every later one
    n_sub, _ = stepper.plan(float(np.max(np.abs(u_fine))), grid.dt)
    if n_sub * grid.n_t > max_substeps:
        raise ConfigError('Burgers solve for nu={} needs {} substeps (limit {})'.format(
            nu, n_sub * grid.n_t, max_substeps))

    frames = np.empty((grid.n_t + 1, 1, grid.n_x))
    frames[0, 0] = u0
    for k in range(1, grid.n_t + 1):
        u_fine = stepper.advance(u_fine, grid.dt)
        frames[k, 0] = box_average(u_fine, grid.n_x)
    return Trajectory(grid, params, frames)
