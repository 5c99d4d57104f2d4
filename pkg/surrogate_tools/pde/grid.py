"""
Interfaces:
* Grid1D - uniform periodic grid (cell centres) and the stored time stepping
* PdeParams - PDE kind plus its scalar parameter (advection velocity or diffusion coefficient)
* Trajectory - one solution sequence u^0..u^N, shape (n_t + 1, c, n_x)
* Dataset - trajectories of a single (kind, parameter, split) group, stored as one array
"""
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Tuple

import numpy as np

from surrogate_tools.decorators import ConfigError, DataError, ShapeError
from surrogate_tools.misc import is_power_of_two

ADVECTION = 'advection'
BURGERS = 'burgers'
PDE_KINDS = (ADVECTION, BURGERS)
KIND_CODES = {ADVECTION: 0, BURGERS: 1}

TRAIN = 'train'
TEST = 'test'
VALIDATION = 'val'
SPLITS = (TRAIN, TEST, VALIDATION)


@dataclass(frozen=True)
class Grid1D:
    n_x: int = 128
    length: float = 1.0
    n_t: int = 40
    dt: float = 0.05

    def __post_init__(self):
        if not is_power_of_two(self.n_x):
            raise ConfigError('n_x must be a power of two, got {}'.format(self.n_x))
        if self.n_t < 1 or self.dt <= 0 or self.length <= 0:
            raise ConfigError('Grid needs n_t >= 1, dt > 0 and length > 0, got {}'.format(self))

    @property
    def dx(self) -> float:
        return self.length / self.n_x

    @property
    def x(self) -> np.ndarray:
        """ Cell centres (j + 1/2) * dx """
        return (np.arange(self.n_x) + 0.5) * self.dx

    @property
    def t_final(self) -> float:
        return self.n_t * self.dt

    def to_dict(self) -> Dict[str, Any]:
        return {'n_x': self.n_x, 'length': self.length, 'n_t': self.n_t, 'dt': self.dt}


@dataclass(frozen=True)
class PdeParams:
    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in PDE_KINDS:
            raise ConfigError('Unknown PDE kind "{}", expected one of {}'.format(self.kind, PDE_KINDS))
        if not self.value > 0:
            raise ConfigError('PDE parameter must be positive, got {}'.format(self.value))

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]

    def __str__(self):
        return '{}({!r})'.format(self.kind, self.value)


@dataclass
class Trajectory:
    grid: Grid1D
    params: PdeParams
    u: np.ndarray

    def __post_init__(self):
        if self.u.ndim != 3 or self.u.shape[0] != self.grid.n_t + 1 or self.u.shape[2] != self.grid.n_x:
            raise ShapeError('Trajectory of shape {} does not fit grid {}'.format(self.u.shape, self.grid))
        if not np.all(np.isfinite(self.u)):
            raise DataError('Trajectory {} holds non-finite values'.format(self.params))

    @property
    def n_channels(self) -> int:
        return self.u.shape[1]


@dataclass
class Dataset:
    grid: Grid1D
    params: PdeParams
    split: str
    # (n_traj, n_t + 1, c, n_x)
    u: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ConfigError('Unknown split "{}"'.format(self.split))
        if self.u.ndim != 4 or self.u.shape[1] != self.grid.n_t + 1 or self.u.shape[3] != self.grid.n_x:
            raise ShapeError('Dataset array {} does not fit grid {}'.format(self.u.shape, self.grid))

    def __len__(self):
        return self.u.shape[0]

    def __iter__(self) -> Iterator[Trajectory]:
        for u in self.u:
            yield Trajectory(self.grid, self.params, u)

    @property
    def n_channels(self) -> int:
        return self.u.shape[2]

    def subset(self, index, split: str = None) -> 'Dataset':
        return Dataset(self.grid, self.params, split or self.split, self.u[index], dict(self.metadata))

    @classmethod
    def from_trajectories(
            cls, trajectories: List[Trajectory], split: str, metadata: Dict[str, Any] = None) -> 'Dataset':
        if not trajectories:
            raise DataError('Cannot build a dataset without trajectories')
        first = trajectories[0]
        for item in trajectories[1:]:
            if item.grid != first.grid or item.params != first.params:
                raise DataError('Trajectories of one dataset must share grid and parameters')
        return cls(first.grid, first.params, split, np.stack([item.u for item in trajectories]), metadata or {})


def split_holdout(dataset: Dataset, fraction: float) -> Tuple[Dataset, Optional[Dataset]]:
    """ Splits the tail `fraction` of a training group off as validation; returns (train, val or None) """
    n_val = int(round(len(dataset) * fraction))
    if n_val <= 0:
        return dataset, None
    if n_val >= len(dataset):
        raise ConfigError('Validation fraction {} leaves no training trajectories'.format(fraction))
    return dataset.subset(slice(0, len(dataset) - n_val)), dataset.subset(slice(len(dataset) - n_val, None), VALIDATION)
