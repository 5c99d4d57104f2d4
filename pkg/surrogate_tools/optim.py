from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping

import numpy as np

from surrogate_tools.decorators import ShapeError
from surrogate_tools.tensor import Tensor


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    # per-parameter update counts: bias correction stays exact for parameters frozen for a while (warm-up)
    counts: Dict[str, int] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray], state: AdamState) -> Mapping[str, Tensor]:
    """
    One bias-corrected Adam update, in place. Parameters without an entry in `grads` are left untouched
    """
    state.step += 1
    for name, g in grads.items():
        param = params[name]
        if g.shape != param.shape:
            raise ShapeError('Gradient of "{}" has shape {}, parameter {}'.format(name, g.shape, param.shape))
        if name not in state.m:
            state.m[name] = np.zeros_like(param.data)
            state.v[name] = np.zeros_like(param.data)
            state.counts[name] = 0
        elif state.m[name].shape != param.shape:
            raise ShapeError('Adam moments of "{}" have shape {}, parameter {}'.format(
                name, state.m[name].shape, param.shape))

        state.counts[name] += 1
        t = state.counts[name]
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)

        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        param.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


class Adam:
    """ Optimizer over a fixed set of named parameters, reads `.grad` of each """

    def __init__(self, params: Mapping[str, Tensor], lr: float = 1e-3, state: AdamState = None):
        self.params = dict(params)
        self.state = state or AdamState(lr=lr)

    @property
    def lr(self) -> float:
        return self.state.lr

    @lr.setter
    def lr(self, value: float):
        self.state.lr = float(value)

    def step(self, only: Iterable[str] = None):
        names = set(only) if only is not None else None
        grads = {
            name: p.grad for name, p in self.params.items()
            if p.grad is not None and (names is None or name in names)}
        adam_step(self.params, grads, self.state)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()


def step_decay_lr(epoch: int, lr0: float, halve_every: int = 20, factor: float = 2.0) -> float:
    """ lr0 divided by `factor` every `halve_every` epochs """
    return lr0 / factor ** (epoch // halve_every) if halve_every > 0 else lr0
