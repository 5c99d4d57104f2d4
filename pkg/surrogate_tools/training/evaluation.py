"""
Autoregressive rollout and per-parameter evaluation.

Interfaces:
* rollout - feeds a surrogate its own predictions, no noise
* evaluate - mean / std over trajectories of the mean-over-frames nRMSE, one row per (kind, parameter, split)
* EvalReport - report rows, per-frame error curves, wall clock and config hash
"""
from dataclasses import dataclass, field
from os.path import join
from time import time
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np

from surrogate_tools import logger
from surrogate_tools.decorators import NumericError, RolloutDiverged, ShapeError
from surrogate_tools.misc import save_json
from surrogate_tools.models.conditioning import Surrogate
from surrogate_tools.pde.grid import Dataset
from surrogate_tools.tabular import ResultTable
from surrogate_tools.tensor import Tensor, no_grad
from surrogate_tools.training.losses import nrmse_values

REPORT_COLS = ('kind', 'param', 'split', 'seen', 'nrmse_mean', 'nrmse_std', 'n_traj', 'config_hash')
FRAME_COLS = ('kind', 'param', 'split', 'frame', 'nrmse', 'config_hash')

EVAL_BATCH = 50


def rollout(surrogate: Surrogate, u0: np.ndarray, params, n_steps: int, u1: np.ndarray = None) -> np.ndarray:
    """
    :param u0: initial frame(s), (c, n_x) or (B, c, n_x)
    :param params: PDE parameter(s) matching the leading batch axes of u0
    :param n_steps: N_t
    :param u1: true second frame, required in prev2 mode; it is returned as frame 1 unchanged
    :return: frames 1..N_t, shape (n_steps, c, n_x) or (B, n_steps, c, n_x)
    :raise RolloutDiverged: on the first non-finite prediction
    """
    if surrogate.uses_previous and u1 is None:
        raise ShapeError('prev2 rollout needs the second true frame')
    frames = []
    with no_grad():
        previous, current = None, Tensor(u0)
        start = 0
        if surrogate.uses_previous:
            previous, current = current, Tensor(u1)
            frames.append(current.data)
            start = 1
        for k in range(start, n_steps):
            try:
                pred, _ = surrogate.step(current, params, previous)
            except NumericError:
                raise RolloutDiverged(k + 1)
            if not np.all(np.isfinite(pred.data)):
                raise RolloutDiverged(k + 1)
            frames.append(pred.data)
            previous, current = current, pred
    step_axis = np.ndim(u0) - surrogate.n_dims - 1
    return np.stack(frames, axis=step_axis)


def first_predicted_frame(surrogate: Surrogate) -> int:
    """ Index (into frames 1..N_t) of the first frame that is a model output """
    return 1 if surrogate.uses_previous else 0


@dataclass
class EvalReport:
    rows: ResultTable
    frames: ResultTable
    wall_clock: float
    config_hash: str = ''
    meta: Dict[str, Any] = field(default_factory=dict)

    def mean_nrmse(self, split: str = None, seen: Optional[bool] = None) -> float:
        conditions = {}
        if split is not None:
            conditions['split'] = split
        if seen is not None:
            conditions['seen'] = seen
        values = self.rows.filtered(**conditions).extract_column('nrmse_mean')
        return float(np.mean(values)) if values else float('nan')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'rows': list(self.rows.to_dicts()),
            'wall_clock': self.wall_clock,
            'config_hash': self.config_hash,
            'meta': self.meta,
        }

    def write(self, out_dir: str, prefix: str = 'eval') -> Dict[str, str]:
        paths = {
            'report': join(out_dir, '{}_report.csv'.format(prefix)),
            'frames': join(out_dir, '{}_frames.csv'.format(prefix)),
            'json': join(out_dir, '{}_report.json'.format(prefix)),
        }
        self.rows.write_csv(paths['report'])
        self.frames.write_csv(paths['frames'])
        ok, err = save_json(paths['json'], self.to_dict())
        if not ok:
            raise OSError('Cannot write {}: {}'.format(paths['json'], err))
        return paths


def trajectory_errors(surrogate: Surrogate, dataset: Dataset, batch_size: int = EVAL_BATCH) -> np.ndarray:
    """ nRMSE per (trajectory, predicted frame), shape (n_traj, n_frames) """
    n_steps = dataset.grid.n_t
    skip = first_predicted_frame(surrogate)
    errors = []
    for lo in range(0, len(dataset), batch_size):
        u = dataset.u[lo:lo + batch_size]
        params = np.full(len(u), dataset.params.value)
        pred = rollout(surrogate, u[:, 0], params, n_steps, u[:, 1] if surrogate.uses_previous else None)
        errors.append(nrmse_values(pred[:, skip:], u[:, 1 + skip:], surrogate.n_dims))
    return np.concatenate(errors, axis=0)


def evaluate(
        surrogate: Surrogate, datasets: Iterable[Dataset], seen_params: Sequence[float] = (),
        config_hash: str = '', batch_size: int = EVAL_BATCH) -> EvalReport:
    start = time()
    seen = {float(p) for p in seen_params}
    rows, frame_rows = [], []
    for dataset in datasets:
        errors = trajectory_errors(surrogate, dataset, batch_size)
        per_traj = errors.mean(axis=1)
        kind, value = dataset.params.kind, dataset.params.value
        rows.append((
            kind, value, dataset.split, value in seen, float(per_traj.mean()), float(per_traj.std()), len(dataset),
            config_hash))
        skip = first_predicted_frame(surrogate)
        for idx, frame_error in enumerate(errors.mean(axis=0)):
            frame_rows.append((kind, value, dataset.split, idx + 1 + skip, float(frame_error), config_hash))
        logger.debug('Evaluated {} ({}): nRMSE {:.4g} +- {:.4g}'.format(
            dataset.params, dataset.split, per_traj.mean(), per_traj.std()))

    return EvalReport(
        ResultTable(rows, REPORT_COLS), ResultTable(frame_rows, FRAME_COLS), time() - start, config_hash)

