from dataclasses import dataclass

import numpy as np

from surrogate_tools.decorators import ConfigError, ShapeError
from surrogate_tools.layers import conv1x1
from surrogate_tools.models.base import Module, kaiming_uniform, spectral_normal
from surrogate_tools.spectral import check_modes, mode_shape, spectral_conv
from surrogate_tools.tensor import Tensor, gelu

FNO_WIDTH = 36
FNO_WIDTH_WITH_CAPE = 20


@dataclass(frozen=True)
class FnoConfig:
    in_channels: int = 1
    out_channels: int = 1
    width: int = FNO_WIDTH
    modes: int = 12
    n_layers: int = 4
    projection: int = 128
    n_dims: int = 1

    def __post_init__(self):
        if min(self.in_channels, self.out_channels, self.modes, self.n_layers, self.projection, self.n_dims) < 1:
            raise ConfigError('FNO sizes must be positive: {}'.format(self))
        if self.width < self.out_channels:
            raise ConfigError('FNO width {} below {} output channels'.format(self.width, self.out_channels))

    def check_spatial(self, spatial):
        check_modes(tuple(spatial), self.modes)


class Fno(Module):
    """
    Lift (1x1) -> n_layers x (spectral conv + parallel 1x1, summed, GeLU except after the last) ->
    two-stage 1x1 projection (width -> projection -> out, GeLU between)
    """
    kind = 'fno'

    def __init__(self, config: FnoConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        width = config.width
        self.channel_axis = -(config.n_dims + 1)

        self.lift_w = self.add_param('lift.w', kaiming_uniform(rng, (width, config.in_channels), config.in_channels))
        self.lift_b = self.add_param('lift.b', kaiming_uniform(rng, (width, ), config.in_channels))
        self.layers = []
        for idx in range(config.n_layers):
            layer = self.add_child('layers.{}'.format(idx), Module())
            layer.add_param('spectral', spectral_normal(rng, mode_shape(config.modes, config.n_dims), width, width))
            layer.add_param('w', kaiming_uniform(rng, (width, width), width))
            layer.add_param('b', kaiming_uniform(rng, (width, ), width))
            self.layers.append(layer)
        self.proj_w = self.add_param('proj.w', kaiming_uniform(rng, (config.projection, width), width))
        self.proj_b = self.add_param('proj.b', kaiming_uniform(rng, (config.projection, ), width))
        self.out_w = self.add_param(
            'out.w', kaiming_uniform(rng, (config.out_channels, config.projection), config.projection))
        self.out_b = self.add_param('out.b', kaiming_uniform(rng, (config.out_channels, ), config.projection))

    def hidden(self, x: Tensor) -> Tensor:
        """ Features after the last Fourier layer (before projection) """
        if x.ndim < self.config.n_dims + 1 or x.shape[self.channel_axis] != self.config.in_channels:
            raise ShapeError('FNO expects {} input channels, got shape {}'.format(self.config.in_channels, x.shape))
        self.config.check_spatial(x.shape[-self.config.n_dims:])

        h = conv1x1(x, self.lift_w, self.lift_b, channel_axis=self.channel_axis)
        for idx, layer in enumerate(self.layers):
            params = layer.named_parameters()
            h = spectral_conv(h, params['spectral']) + conv1x1(h, params['w'], params['b'], self.channel_axis)
            if idx < len(self.layers) - 1:
                h = gelu(h)
        return h

    def __call__(self, x: Tensor) -> Tensor:
        h = gelu(conv1x1(self.hidden(x), self.proj_w, self.proj_b, self.channel_axis))
        return conv1x1(h, self.out_w, self.out_b, self.channel_axis)


def fno_forward(x: Tensor, model: Fno) -> Tensor:
    return model(x)
