"""
Channel-attention module conditioned on PDE parameters.

The parameter vector (log10 of the raw values) feeds three small MLPs; each produces a d-dimensional
gate that scales one convolution branch over the lifted field:

    z_1 = 1x1 conv, z_2 = depthwise conv, z_3 = spectral conv       (all of lift(u))
    y   = head(gelu(lift(u) + sum_a mask_a * z_a))                 (c * ell channels, ell-major)
    intermediate_i = u + LN(y_i) | u + y_i | u * (1 + LN(y_i))     (layernorm | no_layernorm | multiplicative)

USAGE EXAMPLE:

    cape = Cape(CapeConfig(channels=1, d=64, ell=1), rng)
    out = cape(u, params)               # u: (B, c, n_x), params: (B, )
    base_input = assemble_base_input(u, out)
"""
from dataclasses import dataclass, field, replace
from typing import FrozenSet, List, Optional

import numpy as np

from surrogate_tools.decorators import ConfigError, ShapeError
from surrogate_tools.layers import conv1x1, depthwise_conv, layer_norm
from surrogate_tools.misc import write_to_io
from surrogate_tools.models.base import Module, kaiming_uniform, spectral_normal
from surrogate_tools.spectral import mode_shape, spectral_conv
from surrogate_tools.tensor import Tensor, add, concat, gelu, mul, no_grad, reshape, stack, take

LAYERNORM = 'layernorm'
NO_LAYERNORM = 'no_layernorm'
MULTIPLICATIVE = 'multiplicative'
VARIANTS = (LAYERNORM, NO_LAYERNORM, MULTIPLICATIVE)

DROP_CONV1X1 = 'conv1x1'
DROP_DEPTHWISE = 'depthwise'
DROP_SPECTRAL = 'spectral'
DROP_LAYERNORM = 'layernorm'
DROPS = (DROP_SPECTRAL, DROP_CONV1X1, DROP_DEPTHWISE, DROP_LAYERNORM)

# branch index -> drop flag
BRANCHES = ((1, DROP_CONV1X1), (2, DROP_DEPTHWISE), (3, DROP_SPECTRAL))
BRANCH_ORDERS = ('parallel', )


def default_variant(base_kind: str) -> str:
    """ LayerNorm on the intermediate steps hurts an FNO base """
    return NO_LAYERNORM if base_kind == 'fno' else LAYERNORM


@dataclass(frozen=True)
class CapeConfig:
    channels: int = 1
    d: int = 64
    ell: int = 1
    kernel: int = 5
    modes: int = 12
    variant: str = NO_LAYERNORM
    hidden: Optional[int] = None
    n_params: int = 1
    drops: FrozenSet[str] = field(default_factory=frozenset)
    branch_order: str = 'parallel'
    n_dims: int = 1

    def __post_init__(self):
        if self.d < self.channels or self.ell < 1 or self.channels < 1:
            raise ConfigError('CAPE needs d >= c >= 1 and ell >= 1: {}'.format(self))
        if self.variant not in VARIANTS:
            raise ConfigError('Unknown CAPE variant "{}", expected one of {}'.format(self.variant, VARIANTS))
        if self.kernel % 2 == 0:
            raise ConfigError('Depthwise kernel must be odd, got {}'.format(self.kernel))
        unknown = set(self.drops) - set(DROPS)
        if unknown:
            raise ConfigError('Unknown ablation flags {}, expected {}'.format(sorted(unknown), DROPS))
        if self.branch_order not in BRANCH_ORDERS:
            raise ConfigError('CAPE branch order "{}" is not implemented'.format(self.branch_order))

    @property
    def hidden_width(self) -> int:
        return self.hidden or self.d


def ablate(config: CapeConfig, drop: str) -> CapeConfig:
    """ Config with one component removed; dropping layernorm turns the layernorm head into no_layernorm """
    if drop not in DROPS:
        raise ConfigError('Unknown ablation flag "{}", expected one of {}'.format(drop, DROPS))
    variant = NO_LAYERNORM if drop == DROP_LAYERNORM and config.variant == LAYERNORM else config.variant
    return replace(config, drops=frozenset(config.drops | {drop}), variant=variant)


@dataclass
class CapeOutput:
    # (..., ell, c, *spatial)
    intermediates: Tensor
    masks: List[Tensor]
    z: List[Optional[Tensor]]
    y: Tensor


class Cape(Module):
    def __init__(self, config: CapeConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        d, hidden, c = config.d, config.hidden_width, config.channels
        self.channel_axis = -(config.n_dims + 1)

        for idx, _ in BRANCHES:
            mlp = self.add_child('mask{}'.format(idx), Module())
            mlp.add_param('w1', kaiming_uniform(rng, (hidden, config.n_params), config.n_params))
            mlp.add_param('b1', kaiming_uniform(rng, (hidden, ), config.n_params))
            mlp.add_param('w2', kaiming_uniform(rng, (d, hidden), hidden))
            mlp.add_param('b2', kaiming_uniform(rng, (d, ), hidden))

        self.lift_w = self.add_param('lift.w', kaiming_uniform(rng, (d, c), c))
        self.lift_b = self.add_param('lift.b', kaiming_uniform(rng, (d, ), c))
        self.g1 = self.add_param('g1.w', kaiming_uniform(rng, (d, d), d))
        self.g2 = self.add_param('g2.k', kaiming_uniform(rng, (d, ) + (config.kernel, ) * config.n_dims,
                                                         config.kernel ** config.n_dims))
        self.g3 = self.add_param('g3.spectral', spectral_normal(rng, mode_shape(config.modes, config.n_dims), d, d))
        self.head_w = self.add_param('head.w', kaiming_uniform(rng, (c * config.ell, d), d))
        self.head_b = self.add_param('head.b', kaiming_uniform(rng, (c * config.ell, ), d))
        if config.variant != NO_LAYERNORM:
            self.ln_gamma = self.add_param('ln.gamma', np.ones(c))
            self.ln_beta = self.add_param('ln.beta', np.zeros(c))

    def encode(self, params) -> Tensor:
        """ log10 of the raw parameters, (..., n_params) """
        values = np.asarray(params, dtype=np.float64)
        if np.any(values <= 0):
            raise ConfigError('PDE parameters must be positive for the log encoding, got {}'.format(values))
        values = np.log10(values)
        if self.config.n_params == 1:
            values = values[..., None]
        if values.shape[-1] != self.config.n_params:
            raise ShapeError('Expected {} PDE parameters, got shape {}'.format(self.config.n_params, values.shape))
        return Tensor(values)

    def attention_masks(self, params) -> List[Tensor]:
        """ Three d-dimensional gates (no activation after the second layer), (..., d) each """
        encoded = self.encode(params)
        masks = []
        for idx, _ in BRANCHES:
            mlp = self._children['mask{}'.format(idx)].named_parameters()
            hidden = gelu(conv1x1(encoded, mlp['w1'], mlp['b1'], channel_axis=-1))
            masks.append(conv1x1(hidden, mlp['w2'], mlp['b2'], channel_axis=-1))
        return masks

    def _branch(self, idx: int, h: Tensor) -> Tensor:
        if idx == 1:
            return conv1x1(h, self.g1, channel_axis=self.channel_axis)
        if idx == 2:
            return depthwise_conv(h, self.g2)
        return spectral_conv(h, self.g3)

    def _norm(self, y_i: Tensor) -> Tensor:
        if DROP_LAYERNORM in self.config.drops:
            return y_i
        n_batch = y_i.ndim - self.config.n_dims - 1
        return layer_norm(y_i, self.ln_gamma, self.ln_beta, n_batch_axes=n_batch)

    def __call__(self, u: Tensor, params) -> CapeOutput:
        config = self.config
        if u.ndim < config.n_dims + 1 or u.shape[self.channel_axis] != config.channels:
            raise ShapeError('CAPE expects {} channels, got shape {}'.format(config.channels, u.shape))

        masks = self.attention_masks(params)
        h = conv1x1(u, self.lift_w, self.lift_b, channel_axis=self.channel_axis)
        total = h
        z = []
        for (idx, flag), mask in zip(BRANCHES, masks):
            if flag in config.drops:
                z.append(None)
                continue
            z_a = self._branch(idx, h)
            z.append(z_a)
            total = add(total, mul(z_a, mask))

        y = conv1x1(gelu(total), self.head_w, self.head_b, channel_axis=self.channel_axis)
        spatial = u.shape[self.channel_axis + 1:]
        lead = u.shape[:self.channel_axis]
        y = reshape(y, lead + (config.ell, config.channels) + spatial)

        steps = []
        for i in range(config.ell):
            y_i = take(y, i, axis=self.channel_axis - 1)
            if config.variant == NO_LAYERNORM:
                steps.append(u + y_i)
            elif config.variant == LAYERNORM:
                steps.append(u + self._norm(y_i))
            else:
                steps.append(u + u * self._norm(y_i))
        return CapeOutput(stack(steps, axis=self.channel_axis - 1), masks, z, y)


def cape_forward(u: Tensor, params, cape: Cape) -> CapeOutput:
    return cape(u, params)


def assemble_base_input(u: Tensor, output: CapeOutput, n_dims: int = 1) -> Tensor:
    """ Channel blocks (u^k, u^{k->k+1}, ..., u^{k->k+ell}) """
    inter = output.intermediates
    channel_axis = u.ndim - n_dims - 1
    if inter.ndim != u.ndim + 1 or inter.shape[:channel_axis] + inter.shape[channel_axis + 1:] != u.shape:
        raise ShapeError('Intermediates {} do not match field {}'.format(inter.shape, u.shape))
    ell = inter.shape[channel_axis]
    blocks = [u] + [take(inter, i, axis=channel_axis) for i in range(ell)]
    return concat(blocks, axis=channel_axis)


def gated_kernels(cape: Cape, param: float) -> np.ndarray:
    """ Depthwise kernels scaled by their channel gate, (d, *kernel) """
    with no_grad():
        mask = cape.attention_masks(param)[1].data
    return cape.g2.data * mask.reshape(mask.shape + (1, ) * cape.config.n_dims)


def dump_gated_kernels(cape: Cape, param: float, filename: str):
    """ CSV without header: one row per channel, channel id followed by the gated taps """
    kernels = gated_kernels(cape, param).reshape(cape.config.d, -1)
    with open(filename, 'w') as f:
        for channel, taps in enumerate(kernels):
            write_to_io(f, channel, *(float(v) for v in taps))
