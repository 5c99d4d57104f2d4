from dataclasses import dataclass
from typing import Tuple

import numpy as np

from surrogate_tools.decorators import ConfigError, ShapeError
from surrogate_tools.layers import circular_conv
from surrogate_tools.models.base import Module, kaiming_uniform
from surrogate_tools.tensor import Tensor, gelu


@dataclass(frozen=True)
class CnnConfig:
    in_channels: int = 1
    out_channels: int = 1
    channels: Tuple[int, ...] = (32, 32, 32)
    kernel: int = 5
    n_dims: int = 1

    def __post_init__(self):
        if self.kernel % 2 == 0:
            raise ConfigError('CNN kernel must be odd, got {}'.format(self.kernel))
        if not self.channels or min(self.channels) < 1 or min(self.in_channels, self.out_channels) < 1:
            raise ConfigError('CNN channel counts must be positive: {}'.format(self))


class Cnn(Module):
    """ Periodic CNN: hidden circular convolutions with GeLU, then a linear output convolution """
    kind = 'cnn'

    def __init__(self, config: CnnConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.channel_axis = -(config.n_dims + 1)
        sizes = (config.in_channels, ) + tuple(config.channels) + (config.out_channels, )
        taps = (config.kernel, ) * config.n_dims
        self.convs = []
        for idx, (c_in, c_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            fan_in = c_in * config.kernel ** config.n_dims
            layer = self.add_child('conv.{}'.format(idx), Module())
            w = layer.add_param('w', kaiming_uniform(rng, (c_out, c_in) + taps, fan_in))
            b = layer.add_param('b', kaiming_uniform(rng, (c_out, ), fan_in))
            self.convs.append((w, b))

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim < self.config.n_dims + 1 or x.shape[self.channel_axis] != self.config.in_channels:
            raise ShapeError('CNN expects {} input channels, got shape {}'.format(self.config.in_channels, x.shape))
        h = x
        for idx, (w, b) in enumerate(self.convs):
            h = circular_conv(h, w, b)
            if idx < len(self.convs) - 1:
                h = gelu(h)
        return h


def cnn_forward(x: Tensor, model: Cnn) -> Tensor:
    return model(x)
