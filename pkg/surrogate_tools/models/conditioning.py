"""
Interfaces:
* make_conditional_input - appends the raw PDE parameter as a constant channel
* make_prev2_input - channel concatenation (u^k, u^{k-1})
* Surrogate - base network plus its conditioning mode (vanilla, conditional, prev2, cape)
"""
from collections import OrderedDict
from typing import Dict, Optional, Tuple

import numpy as np

from surrogate_tools.decorators import ConfigError, ShapeError
from surrogate_tools.models.cape import Cape, CapeConfig, CapeOutput, assemble_base_input
from surrogate_tools.models.cnn import Cnn, CnnConfig
from surrogate_tools.models.fno import Fno, FnoConfig
from surrogate_tools.tensor import Tensor, concat

VANILLA = 'vanilla'
CONDITIONAL = 'conditional'
PREV2 = 'prev2'
CAPE = 'cape'
CONDITIONING_MODES = (VANILLA, CONDITIONAL, PREV2, CAPE)

BASE_PREFIX = 'base.'
CAPE_PREFIX = 'cape.'


def make_conditional_input(u: Tensor, params, n_dims: int = 1) -> Tensor:
    """
    :param u: field (..., c, *spatial)
    :param params: scalar, or one value per leading batch entry
    """
    channel_axis = u.ndim - n_dims - 1
    if channel_axis < 0:
        raise ShapeError('Field of shape {} has no channel axis'.format(u.shape))
    values = np.asarray(params, dtype=np.float64)
    lead = u.shape[:channel_axis]
    if values.ndim and values.shape != lead:
        raise ShapeError('Parameters {} do not match batch {}'.format(values.shape, lead))
    channel = np.broadcast_to(values.reshape(values.shape + (1, ) * (n_dims + 1)),
                              lead + (1, ) + u.shape[channel_axis + 1:])
    return concat([u, Tensor(channel)], axis=channel_axis)


def make_prev2_input(u_k: Tensor, u_km1: Tensor, n_dims: int = 1) -> Tensor:
    if u_k.shape != u_km1.shape:
        raise ShapeError('Current {} and previous {} frames differ in shape'.format(u_k.shape, u_km1.shape))
    return concat([u_k, u_km1], axis=u_k.ndim - n_dims - 1)


def base_in_channels(mode: str, channels: int, ell: int = 1, n_params: int = 1) -> int:
    if mode == VANILLA:
        return channels
    if mode == CONDITIONAL:
        return channels + n_params
    if mode == PREV2:
        return 2 * channels
    if mode == CAPE:
        return channels * (1 + ell)
    raise ConfigError('Unknown conditioning mode "{}", expected one of {}'.format(mode, CONDITIONING_MODES))


class Surrogate:
    """ One-step map u^k -> u^{k+1} of a base network under a conditioning mode """

    def __init__(self, base, mode: str, cape: Optional[Cape] = None):
        if mode not in CONDITIONING_MODES:
            raise ConfigError('Unknown conditioning mode "{}"'.format(mode))
        if (mode == CAPE) != (cape is not None):
            raise ConfigError('CAPE module must be given exactly for the "cape" conditioning mode')
        self.base = base
        self.mode = mode
        self.cape = cape
        self.n_dims = base.config.n_dims
        self.channels = base.config.out_channels

    @classmethod
    def build(
            cls, base_kind: str, mode: str, channels: int, rng: np.random.Generator,
            fno: Dict = None, cnn: Dict = None, cape: CapeConfig = None) -> 'Surrogate':
        if (mode == CAPE) != (cape is not None):
            raise ConfigError('CAPE config must be given exactly for the "cape" conditioning mode')
        ell = cape.ell if cape is not None else 1
        in_channels = base_in_channels(mode, channels, ell)
        if base_kind == 'fno':
            base = Fno(FnoConfig(in_channels=in_channels, out_channels=channels, **(fno or {})), rng)
        elif base_kind == 'cnn':
            base = Cnn(CnnConfig(in_channels=in_channels, out_channels=channels, **(cnn or {})), rng)
        else:
            raise ConfigError('Unknown base model "{}"'.format(base_kind))
        cape_module = Cape(cape, rng) if mode == CAPE else None
        return cls(base, mode, cape_module)

    @property
    def uses_previous(self) -> bool:
        return self.mode == PREV2

    def named_parameters(self) -> Dict[str, Tensor]:
        result = OrderedDict(self.base.named_parameters(BASE_PREFIX))
        if self.cape is not None:
            result.update(self.cape.named_parameters(CAPE_PREFIX))
        return result

    def cape_parameter_names(self):
        return [name for name in self.named_parameters() if name.startswith(CAPE_PREFIX)]

    def parameter_counts(self) -> Dict[str, int]:
        counts = {'base': self.base.parameter_count()}
        counts['cape'] = self.cape.parameter_count() if self.cape is not None else 0
        counts['total'] = counts['base'] + counts['cape']
        return counts

    def state(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, p.data.copy()) for name, p in self.named_parameters().items())

    def load_state(self, state: Dict[str, np.ndarray]):
        self.base.load_state(state, BASE_PREFIX)
        if self.cape is not None:
            self.cape.load_state(state, CAPE_PREFIX)

    def zero_grad(self):
        for p in self.named_parameters().values():
            p.zero_grad()

    def step(self, u_k: Tensor, params, u_km1: Tensor = None) -> Tuple[Tensor, Optional[CapeOutput]]:
        """ Prediction of the next frame, plus the CAPE output in cape mode """
        cape_out = None
        if self.mode == VANILLA:
            x = u_k
        elif self.mode == CONDITIONAL:
            x = make_conditional_input(u_k, params, self.n_dims)
        elif self.mode == PREV2:
            if u_km1 is None:
                raise ShapeError('prev2 conditioning needs the previous frame')
            x = make_prev2_input(u_k, u_km1, self.n_dims)
        else:
            cape_out = self.cape(u_k, params)
            x = assemble_base_input(u_k, cape_out, self.n_dims)
        return self.base(x), cape_out
