"""
Dataset generation and the PDEB1 file format.

PDEB1 layout (little-endian):
    magic "PDEB1\\0" (6 bytes); u16 version = 1; u8 kind (0 advection, 1 burgers); f64 param;
    u32 n_traj, n_t + 1, c, n_x; f64 dt, dx;
    n_traj * (n_t + 1) * c * n_x f64 values, row-major;
    u32 json_len + UTF-8 JSON metadata (seed, generator settings)

USAGE EXAMPLE:

    datasets = generate_dataset('burgers', [0.01, 0.1], n_traj=10, grid=Grid1D(), seed=7, split='train', out_dir='data')
    dataset = read_dataset(dataset_path('data', 'burgers', 'train', 0.01))
"""
from concurrent.futures import ProcessPoolExecutor
from os.path import join
from typing import Dict, Iterable, List

import numpy as np

from surrogate_tools import logger
from surrogate_tools.containers import BinaryReader, BinaryWriter, read_file
from surrogate_tools.decorators import ConfigError, FormatError
from surrogate_tools.misc import check_path
from surrogate_tools.pde.advection import solve_advection
from surrogate_tools.pde.burgers import MAX_SUBSTEPS, OVERSAMPLE, solve_burgers
from surrogate_tools.pde.grid import (
    ADVECTION, BURGERS, KIND_CODES, SPLITS, TEST, TRAIN, Dataset, Grid1D, PdeParams, Trajectory)
from surrogate_tools.pde.initial import MAX_WAVENUMBER, N_MODES, sample_initial_condition

MAGIC = b'PDEB1\x00'
VERSION = 1
HEADER_SIZE = len(MAGIC) + 2 + 1 + 8 + 4 * 4 + 8 * 2
FILE_SUFFIX = '.pdeb'

# PDE parameters of the reference experiments
DEFAULT_PARAMS = {
    ADVECTION: {TRAIN: (0.2, 0.4, 0.7, 2.0, 4.0), TEST: (0.1, 1.0, 7.0)},
    BURGERS: {TRAIN: (0.002, 0.007, 0.02, 0.04, 0.2, 0.4, 2.0), TEST: (0.001, 0.01, 0.1, 1.0, 4.0)},
}
DEFAULT_COUNTS = {TRAIN: 200, TEST: 50}

_KINDS_BY_CODE = {code: kind for kind, code in KIND_CODES.items()}
_SPLIT_CODES = {split: idx for idx, split in enumerate(SPLITS)}


def dataset_path(out_dir: str, kind: str, split: str, param: float) -> str:
    return join(out_dir, '{}_{}_{!r}{}'.format(kind, split, float(param), FILE_SUFFIX))


def _param_key(param: float) -> int:
    # parameter enters the seed tree by value, so adding parameters leaves other files unchanged
    return int(np.float64(param).view(np.uint64))


def trajectory_seeds(seed: int, kind: str, split: str, param: float, n_traj: int) -> List[np.random.SeedSequence]:
    root = np.random.SeedSequence(seed, spawn_key=(KIND_CODES[kind], _SPLIT_CODES[split], _param_key(param)))
    return root.spawn(n_traj)


def solve(kind: str, u0: np.ndarray, param: float, grid: Grid1D, oversample: int = OVERSAMPLE) -> Trajectory:
    if kind == ADVECTION:
        return solve_advection(u0, param, grid)
    if kind == BURGERS:
        return solve_burgers(u0, param, grid, oversample=oversample)
    raise ConfigError('Unknown PDE kind "{}"'.format(kind))


def _generate_one(args) -> Trajectory:
    kind, seed, param, grid, oversample = args
    u0 = sample_initial_condition(seed, grid)
    return solve(kind, u0, param, grid, oversample)


def generate_group(
        kind: str, param: float, n_traj: int, grid: Grid1D, seed: int, split: str,
        oversample: int = OVERSAMPLE, workers: int = 0) -> Dataset:
    """ Trajectories of one (kind, param, split) group; identical for any worker count """
    params = PdeParams(kind, float(param))
    seeds = trajectory_seeds(seed, kind, split, params.value, n_traj)
    jobs = [(kind, s, params.value, grid, oversample) for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trajectories = list(pool.map(_generate_one, jobs))
    else:
        trajectories = [_generate_one(job) for job in jobs]

    metadata = {
        'seed': seed,
        'generator': {
            'initial_condition': {'n_modes': N_MODES, 'max_wavenumber': MAX_WAVENUMBER},
            'solver': 'spectral_shift' if kind == ADVECTION else 'muscl_llf_rk2',
            'oversample': oversample if kind == BURGERS else 1,
            'max_substeps': MAX_SUBSTEPS,
        },
    }
    return Dataset.from_trajectories(trajectories, split, metadata)


def generate_dataset(
        kind: str, params: Iterable[float], n_traj: int, grid: Grid1D, seed: int, split: str, out_dir: str,
        oversample: int = OVERSAMPLE, workers: int = 0) -> Dict[float, str]:
    """
    Generates and writes one PDEB1 file per parameter

    :return: {param: file path}
    """
    if split not in SPLITS:
        raise ConfigError('Unknown split "{}"'.format(split))
    if n_traj < 1:
        raise ConfigError('n_traj must be positive, got {}'.format(n_traj))
    check_path(out_dir)

    written = {}
    for param in params:
        dataset = generate_group(kind, param, n_traj, grid, seed, split, oversample, workers)
        path = dataset_path(out_dir, kind, split, param)
        write_dataset(path, dataset)
        logger.info('Written {} trajectories of {} ({}) to {}'.format(n_traj, dataset.params, split, path))
        written[float(param)] = path
    return written


def write_dataset(path: str, dataset: Dataset):
    n_traj, n_frames, n_channels, n_x = dataset.u.shape
    with open(path, 'wb') as f:
        writer = BinaryWriter(f)
        writer.raw(MAGIC)
        writer.pack('HBd', VERSION, dataset.params.code, dataset.params.value)
        writer.pack('IIII', n_traj, n_frames, n_channels, n_x)
        writer.pack('dd', dataset.grid.dt, dataset.grid.dx)
        writer.floats(dataset.u)
        writer.json_block(dict(dataset.metadata, split=dataset.split))


def read_dataset(path: str) -> Dataset:
    reader = BinaryReader(read_file(path), source=path)
    reader.magic(MAGIC)
    version, = reader.unpack('H', 'version')
    if version != VERSION:
        raise FormatError('{}: unsupported version {}'.format(path, version), offset=len(MAGIC))
    kind_offset = reader.offset
    kind_code, param = reader.unpack('Bd', 'kind and parameter')
    if kind_code not in _KINDS_BY_CODE:
        raise FormatError('{}: unknown PDE kind code {}'.format(path, kind_code), offset=kind_offset)
    dims_offset = reader.offset
    n_traj, n_frames, n_channels, n_x = reader.unpack('IIII', 'dimensions')
    dt, dx = reader.unpack('dd', 'steps')
    try:
        grid = Grid1D(n_x=n_x, length=dx * n_x, n_t=n_frames - 1, dt=dt)
        params = PdeParams(_KINDS_BY_CODE[kind_code], param)
    except ConfigError as e:
        raise FormatError('{}: invalid header ({})'.format(path, e.message), offset=dims_offset)

    u = reader.floats(n_traj * n_frames * n_channels * n_x, 'trajectories').reshape(
        (n_traj, n_frames, n_channels, n_x))
    metadata = reader.json_block()
    reader.finish()
    split = metadata.pop('split', TRAIN)
    return Dataset(grid, params, split, u, metadata)
