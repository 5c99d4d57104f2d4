"""
Fused, differentiable layer operations on channel-first tensors.

Spatial axes trail the channel axis; an optional batch axis may lead. All spatial convolutions
pad circularly (periodic domains).
"""
from typing import Optional, Tuple

import numpy as np

from surrogate_tools.decorators import ConfigError, ShapeError
from surrogate_tools.tensor import Tensor, record_op

LAYER_NORM_EPS = 1e-5


def _spatial_axes(channel_axis: int, ndim: int) -> Tuple[int, ...]:
    return tuple(range(channel_axis + 1, ndim))


def _kernel_taps(kernel: Tuple[int, ...]):
    """ Yields (tap index, circular shift) pairs of a centred odd kernel """
    if any(size % 2 == 0 for size in kernel):
        raise ConfigError('Kernel extents must be odd, got {}'.format(kernel))
    radius = tuple(size // 2 for size in kernel)
    for tap in np.ndindex(*kernel):
        yield tap, tuple(r - t for r, t in zip(radius, tap))


def conv1x1(x: Tensor, w: Tensor, bias: Optional[Tensor] = None, channel_axis: int = 0) -> Tensor:
    """
    Per-site linear map over channels (also serves as a dense layer on (B, features) input)

    :param x: input with channels on `channel_axis`
    :param w: weights (c_out, c_in)
    :param bias: optional (c_out, )
    """
    channel_axis %= x.ndim
    if w.ndim != 2 or w.shape[1] != x.shape[channel_axis]:
        raise ShapeError('conv1x1: weights {} do not match {} input channels'.format(w.shape, x.shape[channel_axis]))
    c_out, c_in = w.shape
    if bias is not None and bias.shape != (c_out, ):
        raise ShapeError('conv1x1: bias shape {} != ({},)'.format(bias.shape, c_out))

    x_last = np.moveaxis(x.data, channel_axis, -1)
    out = x_last @ w.data.T
    if bias is not None:
        out = out + bias.data

    def backward_fn(g):
        g_last = np.moveaxis(g, channel_axis, -1)
        g_flat = g_last.reshape(-1, c_out)
        g_x = np.moveaxis(g_last @ w.data, -1, channel_axis)
        g_w = g_flat.T @ x_last.reshape(-1, c_in)
        return g_x, g_w, (g_flat.sum(axis=0) if bias is not None else None)

    inputs = (x, w) if bias is None else (x, w, bias)
    return record_op(np.moveaxis(out, -1, channel_axis), inputs, backward_fn, 'conv1x1')


def depthwise_conv(x: Tensor, kernel: Tensor) -> Tensor:
    """
    Each channel cross-correlated with its own centred kernel, circular padding

    :param x: (..., c, *spatial)
    :param kernel: (c, *kernel_extents), odd extents
    """
    n_dims = kernel.ndim - 1
    channel_axis = x.ndim - n_dims - 1
    if n_dims < 1 or channel_axis < 0 or x.shape[channel_axis] != kernel.shape[0]:
        raise ShapeError('depthwise_conv: kernel {} does not match input {}'.format(kernel.shape, x.shape))
    axes = _spatial_axes(channel_axis, x.ndim)
    taps = list(_kernel_taps(kernel.shape[1:]))
    c = kernel.shape[0]
    tap_shape = (c, ) + (1, ) * n_dims
    other_axes = tuple(ax for ax in range(x.ndim) if ax != channel_axis)

    out = np.zeros_like(x.data)
    for tap, shift in taps:
        out += kernel.data[(slice(None), ) + tap].reshape(tap_shape) * np.roll(x.data, shift, axis=axes)

    def backward_fn(g):
        g_x = np.zeros_like(x.data)
        g_k = np.zeros_like(kernel.data)
        for tap, shift in taps:
            k_tap = kernel.data[(slice(None), ) + tap].reshape(tap_shape)
            g_x += k_tap * np.roll(g, tuple(-s for s in shift), axis=axes)
            g_k[(slice(None), ) + tap] = np.sum(g * np.roll(x.data, shift, axis=axes), axis=other_axes)
        return g_x, g_k

    return record_op(out, (x, kernel), backward_fn, 'depthwise_conv')


def circular_conv(x: Tensor, w: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Dense (all channels to all channels) convolution, circular padding

    :param x: (..., c_in, *spatial)
    :param w: (c_out, c_in, *kernel_extents), odd extents
    :param bias: optional (c_out, )
    """
    n_dims = w.ndim - 2
    channel_axis = x.ndim - n_dims - 1
    if n_dims < 1 or channel_axis < 0 or x.shape[channel_axis] != w.shape[1]:
        raise ShapeError('circular_conv: weights {} do not match input {}'.format(w.shape, x.shape))
    c_out, c_in = w.shape[:2]
    axes = _spatial_axes(channel_axis, x.ndim)
    taps = list(_kernel_taps(w.shape[2:]))

    out = np.zeros(x.shape[:channel_axis] + (c_out, ) + x.shape[channel_axis + 1:])
    shifted = []
    for tap, shift in taps:
        x_last = np.moveaxis(np.roll(x.data, shift, axis=axes), channel_axis, -1)
        shifted.append(x_last)
        out += np.moveaxis(x_last @ w.data[(slice(None), slice(None)) + tap].T, -1, channel_axis)
    if bias is not None:
        out += bias.data.reshape((c_out, ) + (1, ) * n_dims)

    def backward_fn(g):
        g_last = np.moveaxis(g, channel_axis, -1)
        g_flat = g_last.reshape(-1, c_out)
        g_x = np.zeros_like(x.data)
        g_w = np.zeros_like(w.data)
        for (tap, shift), x_last in zip(taps, shifted):
            w_tap = w.data[(slice(None), slice(None)) + tap]
            g_x += np.roll(np.moveaxis(g_last @ w_tap, -1, channel_axis), tuple(-s for s in shift), axis=axes)
            g_w[(slice(None), slice(None)) + tap] = g_flat.T @ x_last.reshape(-1, c_in)
        return g_x, g_w, (g_flat.sum(axis=0) if bias is not None else None)

    inputs = (x, w) if bias is None else (x, w, bias)
    return record_op(out, inputs, backward_fn, 'circular_conv')


def layer_norm(
        x: Tensor, gamma: Optional[Tensor] = None, beta: Optional[Tensor] = None, n_batch_axes: int = 0,
        eps: float = LAYER_NORM_EPS) -> Tensor:
    """
    Normalizes over every axis after the first `n_batch_axes` ones.
    `gamma` / `beta` shapes must be a prefix of the normalized shape (e.g. per-channel), trailing axes broadcast
    """
    if x.size == 0:
        raise ShapeError('layer_norm of an empty tensor')
    axes = tuple(range(n_batch_axes, x.ndim))
    norm_shape = x.shape[n_batch_axes:]
    for param in (gamma, beta):
        if param is not None and norm_shape[:param.ndim] != param.shape:
            raise ShapeError('layer_norm: affine shape {} does not prefix {}'.format(param.shape, norm_shape))

    def expand(param):
        return param.data.reshape(param.shape + (1, ) * (len(norm_shape) - param.ndim))

    count = int(np.prod(norm_shape))
    mu = x.data.mean(axis=axes, keepdims=True)
    centred = x.data - mu
    inv_std = 1.0 / np.sqrt((centred * centred).mean(axis=axes, keepdims=True) + eps)
    x_hat = centred * inv_std
    out = x_hat * expand(gamma) if gamma is not None else x_hat
    if beta is not None:
        out = out + expand(beta)

    def param_grad(values, param):
        return values.sum(axis=tuple(range(n_batch_axes))).reshape(
            param.shape + (-1, )).sum(axis=-1) if param is not None else None

    def backward_fn(g):
        g_hat = g * expand(gamma) if gamma is not None else g
        g_x = inv_std / count * (
            count * g_hat - g_hat.sum(axis=axes, keepdims=True)
            - x_hat * (g_hat * x_hat).sum(axis=axes, keepdims=True))
        return g_x, param_grad(g * x_hat, gamma), param_grad(g, beta)

    inputs = (x, ) + tuple(p for p in (gamma, beta) if p is not None)

    def routed_backward(g):
        g_x, g_gamma, g_beta = backward_fn(g)
        return (g_x, ) + tuple(v for p, v in ((gamma, g_gamma), (beta, g_beta)) if p is not None)

    return record_op(out, inputs, routed_backward, 'layer_norm')
