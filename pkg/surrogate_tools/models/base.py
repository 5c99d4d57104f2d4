"""
Interfaces:
* Module - named parameter container; children are namespaced with dots ("layers.0.spectral")
* kaiming_uniform / spectral_normal - initializers
"""
from collections import OrderedDict
from typing import Dict, Mapping

import numpy as np

from surrogate_tools.decorators import ShapeError
from surrogate_tools.tensor import Tensor

# trailing (re, im) axis of spectral weights
COMPLEX_SUFFIX = 'spectral'


def kaiming_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def spectral_normal(rng: np.random.Generator, modes, c_out: int, c_in: int) -> np.ndarray:
    """ Complex-normal weights scaled 1 / (c_in * c_out), stored as (*modes, c_out, c_in, 2) """
    shape = tuple(modes) + (c_out, c_in, 2)
    return rng.standard_normal(shape) / np.sqrt(2.0) / (c_in * c_out)


class Module:
    def __init__(self):
        self._params = OrderedDict()  # type: Dict[str, Tensor]
        self._children = OrderedDict()  # type: Dict[str, Module]

    def add_param(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise ValueError('Parameter "{}" already exists'.format(name))
        tensor = Tensor(data, requires_grad=True, name=name)
        self._params[name] = tensor
        return tensor

    def add_child(self, name: str, module: 'Module') -> 'Module':
        self._children[name] = module
        return module

    def named_parameters(self, prefix: str = '') -> Dict[str, Tensor]:
        result = OrderedDict((prefix + name, p) for name, p in self._params.items())
        for name, child in self._children.items():
            result.update(child.named_parameters('{}{}.'.format(prefix, name)))
        return result

    def parameter_count(self) -> int:
        """ Scalar parameter count; complex spectral weights count once per complex entry """
        total = 0
        for name, p in self.named_parameters().items():
            total += p.size // 2 if name.endswith(COMPLEX_SUFFIX) else p.size
        return total

    def zero_grad(self):
        for p in self.named_parameters().values():
            p.zero_grad()

    def state(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, p.data.copy()) for name, p in self.named_parameters().items())

    def load_state(self, state: Mapping[str, np.ndarray], prefix: str = ''):
        params = self.named_parameters()
        missing = [name for name in params if prefix + name not in state]
        if missing:
            raise ShapeError('State lacks parameters: {}'.format(', '.join(missing)))
        for name, p in params.items():
            value = state[prefix + name]
            if value.shape != p.shape:
                raise ShapeError('Parameter "{}" has shape {}, state holds {}'.format(name, p.shape, value.shape))
            p.data[...] = value
