"""
Schema of the experiment config (JSON). Every key is optional and falls back to DEFAULT_CONFIG;
unknown keys are rejected.
"""
from copy import deepcopy
from typing import Any, Dict

import trafaret as t

from surrogate_tools.decorators import ConfigError
from surrogate_tools.misc import deep_update, is_power_of_two
from surrogate_tools.models.cape import BRANCH_ORDERS, DROPS, VARIANTS
from surrogate_tools.models.conditioning import CONDITIONING_MODES
from surrogate_tools.pde.grid import PDE_KINDS
from surrogate_tools.training.curriculum import TRAINING_MODES

NO_DROP = 'none'

# reference-experiment values where one exists, desk-scale sizes otherwise
DEFAULT_CONFIG = {
    'data': {
        'kind': 'burgers',
        'train_params': [0.002, 0.007, 0.02, 0.04, 0.2, 0.4, 2.0],
        'test_params': [0.001, 0.01, 0.1, 1.0, 4.0],
        'n_train': 200,
        'n_test': 50,
        # held-out trajectories of the training parameters, evaluated as "seen"
        'n_test_seen': 0,
        'grid': {'n_x': 128, 'length': 1.0, 'n_t': 40, 'dt': 0.05},
        'seed': 0,
        'dir': 'data',
        'oversample': 8,
        'workers': 0,
    },
    'model': {
        'kind': 'fno',
        'conditioning': 'cape',
        # width None: 20 with CAPE, 36 otherwise
        'fno': {'width': None, 'modes': 12, 'n_layers': 4, 'projection': 128},
        'cnn': {'channels': [32, 32, 32], 'kernel': 5},
    },
    'cape': {
        'enabled': None,
        'd': 64,
        'ell': 1,
        'kernel': 5,
        'modes': 12,
        # None: no_layernorm for an FNO base, layernorm for a CNN base
        'variant': None,
        'hidden': None,
        'ablation': [],
        'branch_order': 'parallel',
    },
    'train': {
        'epochs': 50,
        'lr': 3e-3,
        'halve_every': 20,
        'batch_size': 50,
        'alpha': 5.7e-5,
        'warmup_epochs': 3,
        'noise': 0.01,
        'mode': 'curriculum',
        'delta': 0.2,
        'seed': 0,
        'bptt': 0,
        'val_fraction': 0.0,
    },
    'run': {'output_dir': 'runs/default', 'checkpoint_every': 10},
    'ablate': {
        # layernorm is only a real ablation where the variant has LayerNorm (CNN base)
        'drops': [NO_DROP, 'spectral', 'conv1x1', 'depthwise'],
        'modes': ['curriculum'],
        'alphas': [],
        'seeds': [],
    },
}


class Choice(t.Trafaret):
    """ One of a fixed set of names; the error lists the accepted ones """

    def __init__(self, *names: str):
        self.names = tuple(names)

    def check_and_return(self, value):
        if not isinstance(value, str) or value not in self.names:
            self._failure('"{}" is not one of {}'.format(value, ', '.join(self.names)), value=value)
        return value

    def __repr__(self):
        return '<Choice({})>'.format(', '.join(self.names))


class Number(t.Trafaret):
    """ int or float (bool excluded), returned as float, with optional bounds """

    def __init__(self, gt=None, gte=None, lt=None, lte=None):
        self.gt, self.gte, self.lt, self.lte = gt, gte, lt, lte

    def check_and_return(self, value):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self._failure('value is not a number', value=value)
        value = float(value)
        if value != value or value in (float('inf'), float('-inf')):
            self._failure('value is not finite', value=value)
        for bound, ok, text in (
                (self.gt, lambda b: value > b, 'greater than'),
                (self.gte, lambda b: value >= b, 'greater than or equal to'),
                (self.lt, lambda b: value < b, 'less than'),
                (self.lte, lambda b: value <= b, 'less than or equal to')):
            if bound is not None and not ok(bound):
                self._failure('value should be {} {}'.format(text, bound), value=value)
        return value


class Integer(t.Trafaret):
    """ int (bool excluded) with an optional lower bound and parity/power-of-two checks """

    def __init__(self, gte=None, odd=False, power_of_two=False):
        self.gte, self.odd, self.power_of_two = gte, odd, power_of_two

    def check_and_return(self, value):
        if isinstance(value, bool) or not isinstance(value, int):
            self._failure('value is not an integer', value=value)
        if self.gte is not None and value < self.gte:
            self._failure('value should be greater than or equal to {}'.format(self.gte), value=value)
        if self.odd and value % 2 == 0:
            self._failure('value must be odd', value=value)
        if self.power_of_two and not is_power_of_two(value):
            self._failure('value must be a power of two', value=value)
        return value


def _optional(schema: Dict[str, t.Trafaret]) -> t.Dict:
    return t.Dict({t.Key(name, optional=True): trafaret for name, trafaret in schema.items()})


POSITIVE_INT = Integer(gte=1)
PARAMS = t.List(Number(gt=0))

GRID = _optional({
    'n_x': Integer(gte=2, power_of_two=True),
    'length': Number(gt=0),
    'n_t': POSITIVE_INT,
    'dt': Number(gt=0),
})

DATA = _optional({
    'kind': Choice(*PDE_KINDS),
    'train_params': t.List(Number(gt=0), min_length=1),
    'test_params': PARAMS,
    'n_train': POSITIVE_INT,
    'n_test': POSITIVE_INT,
    'n_test_seen': Integer(gte=0),
    'grid': GRID,
    'seed': Integer(gte=0),
    'dir': t.String(),
    'oversample': Integer(gte=1, power_of_two=True),
    'workers': Integer(gte=0),
})

MODEL = _optional({
    'kind': Choice('fno', 'cnn'),
    'conditioning': Choice(*CONDITIONING_MODES),
    'fno': _optional({
        'width': t.Null() | POSITIVE_INT,
        'modes': POSITIVE_INT,
        'n_layers': POSITIVE_INT,
        'projection': POSITIVE_INT,
    }),
    'cnn': _optional({
        'channels': t.List(POSITIVE_INT, min_length=1),
        'kernel': Integer(gte=1, odd=True),
    }),
})

CAPE = _optional({
    'enabled': t.Null() | t.Bool(),
    'd': POSITIVE_INT,
    'ell': POSITIVE_INT,
    'kernel': Integer(gte=1, odd=True),
    'modes': POSITIVE_INT,
    'variant': t.Null() | Choice(*VARIANTS),
    'hidden': t.Null() | POSITIVE_INT,
    'ablation': t.List(Choice(*DROPS)),
    'branch_order': Choice(*BRANCH_ORDERS),
})

TRAIN = _optional({
    'epochs': POSITIVE_INT,
    'lr': Number(gte=0),
    'halve_every': POSITIVE_INT,
    'batch_size': POSITIVE_INT,
    'alpha': Number(gte=0),
    'warmup_epochs': Integer(gte=0),
    'noise': Number(gte=0),
    'mode': Choice(*TRAINING_MODES),
    'delta': Number(gt=0),
    'seed': Integer(gte=0),
    'bptt': Integer(gte=0),
    'val_fraction': Number(gte=0, lt=1),
})

RUN = _optional({
    'output_dir': t.String(),
    'checkpoint_every': POSITIVE_INT,
})

ABLATE = _optional({
    'drops': t.List(Choice(NO_DROP, *DROPS), min_length=1),
    'modes': t.List(Choice(*TRAINING_MODES), min_length=1),
    'alphas': t.List(Number(gte=0)),
    'seeds': t.List(Integer(gte=0)),
})

EXPERIMENT = _optional({
    'data': DATA,
    'model': MODEL,
    'cape': CAPE,
    'train': TRAIN,
    'run': RUN,
    'ablate': ABLATE,
})


def _flatten_errors(errors, prefix: str = '') -> str:
    if isinstance(errors, dict):
        return '; '.join(_flatten_errors(value, '{}{}.'.format(prefix, key)) for key, value in errors.items())
    return '{}: {}'.format(prefix.rstrip('.'), errors)


def validate_config(raw: Dict[str, Any]) -> Dict[str, Any]:
    """ Full experiment config: schema-checked input merged over DEFAULT_CONFIG """
    try:
        checked = EXPERIMENT.check(raw)
    except t.DataError as e:
        raise ConfigError('Invalid experiment config: {}'.format(_flatten_errors(e.as_dict(value=True))))

    config = deepcopy(DEFAULT_CONFIG)
    deep_update(config, checked)

    enabled = config['cape']['enabled']
    if enabled is not None and enabled != (config['model']['conditioning'] == 'cape'):
        raise ConfigError('cape.enabled contradicts model.conditioning "{}"'.format(config['model']['conditioning']))
    return config
