from typing import Callable, Sequence, Union

import numpy as np

from surrogate_tools.tensor import Tape, Tensor, backward, no_grad


def grad_check(f: Callable[..., Tensor], inputs: Union[Tensor, Sequence[Tensor]], h: float = 1e-5) -> float:
    """
    Compares reverse-mode gradients of a scalar function with central finite differences

    :param f: called as f(*inputs); may also ignore its arguments and read the tensors it closes over
        (inputs are perturbed in place)
    :param inputs: tensor or tensors to differentiate against
    :param h: finite-difference step
    :return: max over coordinates of |analytic - fd| / max(1, |analytic|)
    """
    inputs = [inputs] if isinstance(inputs, Tensor) else list(inputs)
    flags = [t.requires_grad for t in inputs]
    saved = [t.grad for t in inputs]
    for t in inputs:
        t.requires_grad = True
        t.grad = None

    try:
        with Tape():
            loss = f(*inputs)
            backward(loss)
        analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in inputs]

        worst = 0.0
        with no_grad():
            for t, grad in zip(inputs, analytic):
                for idx in np.ndindex(*t.shape):
                    origin = t.data[idx]
                    t.data[idx] = origin + h
                    f_plus = f(*inputs).item()
                    t.data[idx] = origin - h
                    f_minus = f(*inputs).item()
                    t.data[idx] = origin
                    fd = (f_plus - f_minus) / (2.0 * h)
                    worst = max(worst, abs(grad[idx] - fd) / max(1.0, abs(grad[idx])))
        return worst
    finally:
        for t, flag, grad in zip(inputs, flags, saved):
            t.requires_grad = flag
            t.grad = grad
