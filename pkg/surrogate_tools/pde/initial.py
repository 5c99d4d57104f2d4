"""
Initial conditions, spectral refinement and shifts on periodic cell-centred grids
"""
from typing import Union

import numpy as np

from surrogate_tools.decorators import ConfigError, NumericError, ShapeError
from surrogate_tools.pde.grid import Grid1D
from surrogate_tools.spectral import irfft, rfft

N_MODES = 4
MAX_WAVENUMBER = 4

Seed = Union[int, np.random.SeedSequence]


def sample_initial_condition(
        seed: Seed, grid: Grid1D, n_modes: int = N_MODES, max_wavenumber: int = MAX_WAVENUMBER) -> np.ndarray:
    """
    Sum of `n_modes` sinusoids, wavenumbers drawn from 1..max_wavenumber, amplitudes U(0, 1),
    phases U(0, 2pi); shifted to zero mean and scaled to unit max-abs

    :return: field (n_x, )
    """
    if max_wavenumber >= grid.n_x // 2:
        raise ConfigError('Wavenumber {} is not resolved on {} sites'.format(max_wavenumber, grid.n_x))
    rng = np.random.default_rng(seed)
    wavenumbers = rng.integers(1, max_wavenumber + 1, size=n_modes)
    amplitudes = rng.uniform(0.0, 1.0, size=n_modes)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_modes)

    x = grid.x / grid.length
    u = np.sum(amplitudes[:, None] * np.sin(2.0 * np.pi * wavenumbers[:, None] * x[None, :] + phases[:, None]), axis=0)
    u -= u.mean()
    peak = np.max(np.abs(u))
    if peak <= 0.0:
        raise NumericError('Degenerate initial condition for seed {}'.format(seed))
    return u / peak


def _centre_phase(n: int, n_bins: int, offset: float) -> np.ndarray:
    """ Phase factor moving samples by `offset` coarse cells """
    return np.exp(2j * np.pi * np.arange(n_bins) * offset / n)


def refine_cell_averages(u: np.ndarray, n_fine: int) -> np.ndarray:
    """
    Band-limited fine field whose box averages over the coarse cells reproduce `u`.

    Every coarse mode k is divided by the response of the discrete box average,
    S_k = mean_q exp(2 pi i k q / n_fine) over the `n_fine / n` fine sites of a cell.
    The coarse Nyquist bin gets half weight: its conjugate partner aliases onto the same coarse bin.
    """
    n = u.shape[-1]
    if n_fine < n or n_fine % n:
        raise ShapeError('Cannot refine {} cells onto {} sites'.format(n, n_fine))
    ratio = n_fine // n
    n_bins = n // 2 + 1
    response = np.exp(2j * np.pi * np.outer(np.arange(n_bins), np.arange(ratio)) / n_fine).mean(axis=1)
    spectrum = ratio * rfft(u) / response
    if n % 2 == 0 and ratio > 1:
        spectrum[..., n // 2] *= 0.5
    fine = np.zeros(u.shape[:-1] + (n_fine // 2 + 1, ), dtype=np.complex128)
    fine[..., :n_bins] = spectrum
    return irfft(fine, n_fine)


def spectral_shift(u: np.ndarray, cells: float) -> np.ndarray:
    """ u(x - cells * dx) through a Fourier phase shift; exact for band-limited fields """
    n = u.shape[-1]
    spectrum = rfft(u) * _centre_phase(n, n // 2 + 1, -cells)
    return irfft(spectrum, n)


def box_average(u_fine: np.ndarray, n: int) -> np.ndarray:
    """ Cell averages of a fine field over `n` coarse cells """
    n_fine = u_fine.shape[-1]
    if n_fine % n:
        raise ShapeError('{} fine sites do not split into {} cells'.format(n_fine, n))
    return u_fine.reshape(u_fine.shape[:-1] + (n, n_fine // n)).mean(axis=-1)
