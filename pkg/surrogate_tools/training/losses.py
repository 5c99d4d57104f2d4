from typing import Union

import numpy as np

from surrogate_tools.decorators import DegenerateTargetError, ShapeError
from surrogate_tools.tensor import Tensor, mean, sqrt, square, sub, take, tsum

Target = Union[Tensor, np.ndarray]


def _target(truth: Target) -> np.ndarray:
    return truth.data if isinstance(truth, Tensor) else np.asarray(truth, dtype=np.float64)


def _default_batch_axes(ndim: int, n_dims: int) -> int:
    return max(ndim - n_dims - 1, 0)


def nrmse(pred: Tensor, truth: Target, n_dims: int = 1) -> Tensor:
    """
    ||pred - truth|| / ||truth|| over the (channel, spatial) axes, averaged over leading batch axes.
    The target is treated as a constant.
    """
    target = _target(truth)
    if pred.shape != target.shape:
        raise ShapeError('nRMSE of shapes {} and {}'.format(pred.shape, target.shape))
    n_batch = _default_batch_axes(pred.ndim, n_dims)
    axes = tuple(range(n_batch, pred.ndim))
    norm = np.sqrt(np.sum(target * target, axis=axes))
    if np.any(norm == 0.0):
        raise DegenerateTargetError('nRMSE target has zero norm')
    error = sqrt(tsum(square(sub(pred, Tensor(target))), axes))
    return mean(error * Tensor(1.0 / norm))


def nrmse_values(pred: np.ndarray, truth: np.ndarray, n_dims: int = 1) -> np.ndarray:
    """ Per-sample nRMSE without recording, shape = leading batch axes """
    n_batch = _default_batch_axes(pred.ndim, n_dims)
    axes = tuple(range(n_batch, pred.ndim))
    norm = np.sqrt(np.sum(truth * truth, axis=axes))
    if np.any(norm == 0.0):
        raise DegenerateTargetError('nRMSE target has zero norm')
    return np.sqrt(np.sum((pred - truth) ** 2, axis=axes)) / norm


def cape_loss(intermediates: Tensor, future: Target, n_dims: int = 1) -> Tensor:
    """
    Sum over i < min(ell, available frames) of nRMSE(intermediate_i, u^{k+1+i})

    :param intermediates: (..., ell, c, *spatial)
    :param future: true frames u^{k+1}.. as (..., n_available, c, *spatial); n_available may be 0
    """
    target = _target(future)
    step_axis = intermediates.ndim - n_dims - 2
    ell = intermediates.shape[step_axis]
    n_terms = min(ell, target.shape[step_axis])
    loss = None
    for i in range(n_terms):
        term = nrmse(take(intermediates, i, axis=step_axis), np.take(target, i, axis=step_axis), n_dims)
        loss = term if loss is None else loss + term
    return loss if loss is not None else Tensor(0.0)
