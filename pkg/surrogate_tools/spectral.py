"""
Radix-2 Fourier transforms and the FNO spectral convolution.

Normalization: the forward transforms are unnormalized, the inverse ones carry 1/n, so that
`irfft(rfft(x)) == x` and Parseval reads  sum|x|^2 == (1/n) * sum_{full spectrum} |X|^2
(for the half spectrum of `rfft`: (1/n) * (|X_0|^2 + 2 * sum_{0<k<n/2} |X_k|^2 + |X_{n/2}|^2)).

Only power-of-two lengths are supported.
"""
from functools import lru_cache
from string import ascii_lowercase
from typing import Sequence, Tuple, Union

import numpy as np

from surrogate_tools.decorators import ConfigError, ShapeError
from surrogate_tools.misc import is_power_of_two
from surrogate_tools.tensor import Tensor, record_op

Modes = Union[int, Sequence[int]]


@lru_cache(maxsize=None)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@lru_cache(maxsize=None)
def _twiddles(size: int, inverse: bool) -> np.ndarray:
    sign = 1.0 if inverse else -1.0
    return np.exp(sign * 2j * np.pi * np.arange(size // 2) / size)


def _check_length(n: int):
    if not is_power_of_two(n):
        raise ConfigError('FFT length must be a power of two, got {}'.format(n))


def fft(x, axis: int = -1, inverse: bool = False) -> np.ndarray:
    """ Iterative Cooley-Tukey transform along one axis (unnormalized in both directions) """
    a = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    lead, n = a.shape[:-1], a.shape[-1]
    _check_length(n)

    a = a[..., _bit_reversal(n)]
    size = 2
    while size <= n:
        half = size // 2
        blocks = a.reshape(lead + (n // size, size))
        even = blocks[..., :half]
        odd = blocks[..., half:] * _twiddles(size, inverse)
        a = np.concatenate([even + odd, even - odd], axis=-1).reshape(lead + (n, ))
        size *= 2
    return np.moveaxis(a, -1, axis)


def ifft(x, axis: int = -1) -> np.ndarray:
    n = np.shape(x)[axis]
    return fft(x, axis=axis, inverse=True) / n


def rfft(x, axis: int = -1) -> np.ndarray:
    """ Half spectrum (n // 2 + 1 bins) of a real signal """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[axis]
    spectrum = fft(x, axis=axis)
    return np.take(spectrum, np.arange(n // 2 + 1), axis=axis)


def irfft(spectrum, n: int, axis: int = -1) -> np.ndarray:
    """
    Real signal of length `n` from its half spectrum.
    Imaginary parts of the DC and Nyquist bins are ignored.
    """
    _check_length(n)
    half = np.moveaxis(np.asarray(spectrum, dtype=np.complex128), axis, -1)
    n_half = n // 2 + 1
    if half.shape[-1] != n_half:
        raise ShapeError('irfft of length {} needs {} bins, got {}'.format(n, n_half, half.shape[-1]))

    full = np.zeros(half.shape[:-1] + (n, ), dtype=np.complex128)
    full[..., :n_half] = half
    full[..., 0] = half[..., 0].real
    if n > 1:
        full[..., n // 2] = half[..., n // 2].real
        full[..., n_half:] = np.conj(half[..., 1:n - n_half + 1][..., ::-1])
    return np.moveaxis(ifft(full, axis=-1).real, -1, axis)


def rfftn(x, axes: Sequence[int]) -> np.ndarray:
    """ Full transform over all `axes` but the last, half spectrum over the last one """
    out = rfft(x, axis=axes[-1])
    for ax in axes[:-1]:
        out = fft(out, axis=ax)
    return out


def irfftn(spectrum, shape: Sequence[int], axes: Sequence[int]) -> np.ndarray:
    out = np.asarray(spectrum, dtype=np.complex128)
    for ax in axes[:-1]:
        out = ifft(out, axis=ax)
    return irfft(out, shape[-1], axis=axes[-1])


def _last_axis_weights(n_last: int, n_bins: int) -> np.ndarray:
    """ Multiplicity of each half-spectrum bin in the full spectrum (1 for DC and Nyquist, else 2) """
    weights = np.full(n_bins, 2.0)
    weights[0] = 1.0
    if n_last % 2 == 0 and n_bins > n_last // 2:
        weights[n_last // 2] = 1.0
    return weights


def _as_modes(modes: Modes, n_dims: int) -> Tuple[int, ...]:
    modes = (modes, ) * n_dims if isinstance(modes, (int, np.integer)) else tuple(int(m) for m in modes)
    if len(modes) != n_dims:
        raise ConfigError('Expected {} mode counts, got {}'.format(n_dims, modes))
    return modes


def mode_shape(modes: Modes, n_dims: int) -> Tuple[int, ...]:
    """ Weight extents for `modes`: both signs (2m - 1 indices) on full axes, m on the half-spectrum axis """
    modes = _as_modes(modes, n_dims)
    return tuple(2 * m - 1 for m in modes[:-1]) + modes[-1:]


def _modes_from_shape(shape: Sequence[int]) -> Tuple[int, ...]:
    if any(extent % 2 == 0 for extent in shape[:-1]):
        raise ShapeError('Spectral weights need an odd extent (2m - 1) on every axis but the last, got {}'.format(
            tuple(shape)))
    return tuple((extent + 1) // 2 for extent in shape[:-1]) + (int(shape[-1]), )


def check_modes(spatial: Sequence[int], modes: Modes):
    """ ConfigError unless `modes` fit a grid of `spatial` sites """
    modes = _as_modes(modes, len(spatial))
    for extent in spatial:
        _check_length(extent)
    for extent, m in zip(spatial[:-1], modes[:-1]):
        if m < 1 or 2 * m - 1 > extent:
            raise ConfigError('{} modes of both signs do not fit an axis of {} sites'.format(m, extent))
    if modes[-1] < 1 or modes[-1] > spatial[-1] // 2 + 1:
        raise ConfigError('{} modes do not fit an axis of {} sites'.format(modes[-1], spatial[-1]))


def _mode_window(spatial: Sequence[int], modes: Tuple[int, ...]) -> tuple:
    """ Index of the kept bins of an `rfftn` spectrum: |k| < m on full axes, 0 <= k < m on the last one """
    idx = [np.concatenate([np.arange(m), np.arange(n - m + 1, n)]) for n, m in zip(spatial[:-1], modes[:-1])]
    idx.append(np.arange(modes[-1]))
    return (Ellipsis, ) + np.ix_(*idx)


def spectral_conv(x: Tensor, weights: Tensor, modes: Modes = None) -> Tensor:
    """
    FNO spectral convolution: real FFT over the spatial axes, truncation to the frequencies |k| < modes
    per axis (only k >= 0 on the last, half-spectrum axis), per-mode complex channel mixing, inverse FFT.

    Along the full axes the weights list k = 0 .. m - 1 first, then k = -(m - 1) .. -1.

    :param x: real tensor (..., c_in, *spatial)
    :param weights: complex weights stored as real tensor (*mode_shape(modes), c_out, c_in, 2),
        trailing axis = (re, im)
    :param modes: retained modes per spatial axis, taken from `weights` when omitted
    """
    n_dims = weights.ndim - 3
    if n_dims < 1 or weights.shape[-1] != 2:
        raise ShapeError('Spectral weights must have shape (*modes, c_out, c_in, 2), got {}'.format(weights.shape))
    if modes is None:
        modes = _modes_from_shape(weights.shape[:n_dims])
    modes = _as_modes(modes, n_dims)
    if mode_shape(modes, n_dims) != tuple(weights.shape[:n_dims]):
        raise ShapeError('Weights of shape {} do not cover modes {}'.format(weights.shape[:n_dims], modes))

    channel_axis = x.ndim - n_dims - 1
    if channel_axis < 0:
        raise ShapeError('Input of rank {} has no channel axis for {} spatial dims'.format(x.ndim, n_dims))
    c_out, c_in = weights.shape[n_dims:n_dims + 2]
    if x.shape[channel_axis] != c_in:
        raise ShapeError('Spectral conv expects {} input channels, got {}'.format(c_in, x.shape[channel_axis]))

    spatial = tuple(x.shape[channel_axis + 1:])
    axes = tuple(range(channel_axis + 1, x.ndim))
    check_modes(spatial, modes)

    batch = ascii_lowercase[:channel_axis]
    k = 'pqrstuvw'[:n_dims]
    x_sub, w_sub, z_sub = batch + 'i' + k, k + 'oi', batch + 'o' + k

    spectrum = rfftn(x.data, axes)
    window = _mode_window(spatial, modes)
    x_low = spectrum[window]
    w_complex = weights.data[..., 0] + 1j * weights.data[..., 1]
    z_low = np.einsum('{},{}->{}'.format(x_sub, w_sub, z_sub), x_low, w_complex)

    z = np.zeros(x.shape[:channel_axis] + (c_out, ) + spectrum.shape[channel_axis + 1:], dtype=np.complex128)
    z[window] = z_low
    out = irfftn(z, spatial, axes)

    total = float(np.prod(spatial))
    bin_weights = _last_axis_weights(spatial[-1], spectrum.shape[-1])

    def backward_fn(g):
        g_z = (rfftn(g, axes) * (bin_weights / total))[window]
        g_w = np.einsum('{},{}->{}'.format(z_sub, x_sub, w_sub), g_z, np.conj(x_low))
        g_x_low = np.einsum('{},{}->{}'.format(z_sub, w_sub, x_sub), g_z, np.conj(w_complex))
        g_x = np.zeros_like(spectrum)
        g_x[window] = g_x_low
        g_x = total * irfftn(g_x / bin_weights, spatial, axes)
        return g_x, np.stack([g_w.real, g_w.imag], axis=-1)

    return record_op(out, (x, weights), backward_fn, 'spectral_conv')
