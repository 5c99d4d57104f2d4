"""
Curriculum training of one-step surrogates.

Every position k of a trajectory is fed either the model's own previous prediction (k <= k_trans,
autoregressive part, gradients flow through the chain) or the true frame (teacher forcing); Gaussian
noise scaled by the trajectory's standard deviation is added to the input in both cases.
The batch loss is  sum_k nRMSE(u^{k+1}) + alpha * sum_k L_cape  and one Adam step follows each batch.
During the warm-up epochs only the CAPE weights are updated.

USAGE EXAMPLE:

    trainer = Trainer(surrogate, TrainConfig(epochs=50), run_dir='runs/burgers', config_hash=h)
    result = trainer.fit(train_sets, val_sets)
"""
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from os.path import exists, join
from time import time
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from surrogate_tools import logger
from surrogate_tools.decorators import ConfigError, DataError, DegenerateTargetError, NumericError, TrainingDiverged
from surrogate_tools.misc import check_path, save_json
from surrogate_tools.models.checkpoint import (
    adam_meta, adam_tensors, model_tensors, read_checkpoint, restore_adam, write_checkpoint)
from surrogate_tools.models.conditioning import Surrogate
from surrogate_tools.optim import Adam, step_decay_lr
from surrogate_tools.pde.grid import Dataset, TRAIN, VALIDATION
from surrogate_tools.tabular import ResultTable
from surrogate_tools.tensor import Tape, Tensor, backward
from surrogate_tools.training.curriculum import CURRICULUM, CurriculumSchedule, TRAINING_MODES
from surrogate_tools.training.evaluation import evaluate
from surrogate_tools.training.losses import cape_loss, nrmse, nrmse_values

METRIC_COLS = ('epoch', 'split', 'param', 'nrmse', 'lr', 'k_trans', 'config_hash')
LAST_CHECKPOINT = 'last.nnck'
BEST_CHECKPOINT = 'best.nnck'


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    lr: float = 3e-3
    halve_every: int = 20
    batch_size: int = 50
    alpha: float = 5.7e-5
    warmup_epochs: int = 3
    # noise std as a fraction of the per-trajectory std of u
    noise: float = 0.01
    mode: str = CURRICULUM
    delta: float = 0.2
    seed: int = 0
    # backpropagation window through the autoregressive chain, 0 = whole trajectory
    bptt: int = 0
    val_fraction: float = 0.0
    checkpoint_every: int = 10

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.halve_every < 1 or self.checkpoint_every < 1:
            raise ConfigError('epochs, batch_size, halve_every and checkpoint_every must be positive')
        if self.lr < 0 or self.alpha < 0 or self.noise < 0 or self.warmup_epochs < 0 or self.bptt < 0:
            raise ConfigError('lr, alpha, noise, warmup_epochs and bptt must not be negative')
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError('val_fraction must lie in [0, 1), got {}'.format(self.val_fraction))
        if self.mode not in TRAINING_MODES:
            raise ConfigError('Unknown training mode "{}"'.format(self.mode))

    def schedule(self, n_steps: int) -> CurriculumSchedule:
        return CurriculumSchedule(n_epochs=self.epochs, n_steps=n_steps, delta=self.delta, mode=self.mode)


@dataclass
class TrainingSet:
    """ Trajectories of every training parameter, stacked """
    u: np.ndarray
    params: np.ndarray

    @classmethod
    def from_datasets(cls, datasets: Sequence[Dataset]) -> 'TrainingSet':
        if not datasets:
            raise DataError('No training data')
        grid = datasets[0].grid
        for dataset in datasets[1:]:
            if dataset.grid != grid or dataset.n_channels != datasets[0].n_channels:
                raise DataError('Training datasets must share grid and channel count')
        u = np.concatenate([dataset.u for dataset in datasets], axis=0)
        params = np.concatenate([np.full(len(dataset), dataset.params.value) for dataset in datasets])
        return cls(u, params)

    def __len__(self):
        return len(self.u)

    @property
    def n_steps(self) -> int:
        return self.u.shape[1] - 1


@dataclass
class EpochStats:
    epoch: int
    k_trans: int
    lr: float
    loss: float
    # mean one-step nRMSE per training parameter
    param_nrmse: Dict[float, float] = field(default_factory=dict)


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """ Independent stream per epoch, so resumed runs draw the same numbers """
    return np.random.default_rng(np.random.SeedSequence([seed, epoch]))


def batch_loss(
        surrogate: Surrogate, u: np.ndarray, params: np.ndarray, k_trans: int, noise_scale: np.ndarray,
        rng: np.random.Generator, alpha: float, bptt: int = 0, errors: Optional[List[np.ndarray]] = None) -> Tensor:
    """
    Loss of one batch of trajectories u (B, N_t + 1, c, n_x); positions 0 < k <= k_trans reuse predictions

    :param noise_scale: per-trajectory noise std (B, )
    :param errors: when given, receives the per-sample one-step nRMSE of every position
    """
    n_steps = u.shape[1] - 1
    k0 = 1 if surrogate.uses_previous else 0
    noise_shape = u[:, 0].shape
    noise_scale = noise_scale.reshape((-1, ) + (1, ) * (len(noise_shape) - 1))

    loss = None
    predicted, previous_input = None, None
    for k in range(k0, n_steps):
        autoregressive = k0 < k <= k_trans
        current = predicted if autoregressive else Tensor(u[:, k])
        previous = None
        if surrogate.uses_previous:
            previous = previous_input if autoregressive else Tensor(u[:, k - 1])
        noisy = current + Tensor(rng.standard_normal(noise_shape) * noise_scale) if noise_scale.any() else current

        try:
            pred, cape_out = surrogate.step(noisy, params, previous)
            step_loss = nrmse(pred, u[:, k + 1], surrogate.n_dims)
            if cape_out is not None and alpha > 0:
                step_loss = step_loss + alpha * cape_loss(
                    cape_out.intermediates, u[:, k + 1:k + 1 + surrogate.cape.config.ell], surrogate.n_dims)
        except DegenerateTargetError:
            raise
        except NumericError:
            raise TrainingDiverged(None, k, sorted({float(p) for p in np.atleast_1d(params)}))
        if errors is not None:
            errors.append(nrmse_values(pred.data, u[:, k + 1], surrogate.n_dims))

        loss = step_loss if loss is None else loss + step_loss
        if bptt and (k - k0 + 1) % bptt == 0:
            pred = pred.detach()
        predicted, previous_input = pred, current
    if loss is None:
        raise ConfigError('Trajectories of {} frames leave no position to train on'.format(n_steps + 1))
    return loss


def train_epoch(
        surrogate: Surrogate, optimizer: Adam, data: TrainingSet, schedule: CurriculumSchedule,
        config: TrainConfig, epoch: int) -> EpochStats:
    rng = epoch_rng(config.seed, epoch)
    k_trans = schedule.k_trans(epoch)
    order = rng.permutation(len(data))
    warm_up = surrogate.cape is not None and epoch < config.warmup_epochs
    only = surrogate.cape_parameter_names() if warm_up else None

    losses = []
    per_param = defaultdict(list)
    for lo in range(0, len(data), config.batch_size):
        idx = order[lo:lo + config.batch_size]
        u, params = data.u[idx], data.params[idx]
        noise_scale = config.noise * u.reshape(len(u), -1).std(axis=1)
        errors = []

        surrogate.zero_grad()
        with Tape():
            try:
                loss = batch_loss(surrogate, u, params, k_trans, noise_scale, rng, config.alpha, config.bptt, errors)
            except TrainingDiverged as e:
                raise TrainingDiverged(epoch, e.k, e.param)
            if not np.isfinite(loss.item()):
                raise TrainingDiverged(epoch, None, sorted(set(params.tolist())))
            backward(loss)
        optimizer.step(only=only)

        losses.append(loss.item())
        step_errors = np.mean(errors, axis=0)
        for value, error in zip(params, step_errors):
            per_param[float(value)].append(error)

    return EpochStats(
        epoch, k_trans, optimizer.lr, float(np.mean(losses)),
        {value: float(np.mean(errs)) for value, errs in sorted(per_param.items())})


@dataclass
class FitResult:
    history: List[EpochStats]
    metrics: ResultTable
    best_val: Optional[float]
    wall_clock: float


class Trainer:
    def __init__(
            self, surrogate: Surrogate, config: TrainConfig, run_dir: str = None, config_hash: str = '',
            experiment: Dict[str, Any] = None):
        self.surrogate = surrogate
        self.config = config
        self.run_dir = run_dir
        self.config_hash = config_hash
        self.experiment = experiment or {}
        self.optimizer = Adam(surrogate.named_parameters(), lr=config.lr)
        self.start_epoch = 0
        self.best_val = None  # type: Optional[float]
        self.metrics = ResultTable([], METRIC_COLS)
        self.history = []  # type: List[EpochStats]

    def _checkpoint(self, name: str, epoch: int):
        tensors = dict(self.surrogate.state())
        tensors.update(adam_tensors(self.optimizer.state))
        meta = {
            'epoch': epoch,
            'config_hash': self.config_hash,
            'experiment': self.experiment,
            'adam': adam_meta(self.optimizer.state),
            'best_val': self.best_val,
            'metrics': [list(row) for row in self.metrics.rows],
        }
        path = join(self.run_dir, name)
        write_checkpoint(path, tensors, meta)
        logger.debug('Checkpoint {} (epoch {})'.format(path, epoch))

    def resume(self, path: str):
        tensors, meta = read_checkpoint(path)
        self.surrogate.load_state(model_tensors(tensors))
        self.optimizer.state = restore_adam(tensors, meta['adam'])
        self.start_epoch = int(meta['epoch']) + 1
        self.best_val = meta.get('best_val')
        self.metrics = ResultTable([tuple(row) for row in meta.get('metrics', [])], METRIC_COLS)
        logger.info('Resumed from {} at epoch {}'.format(path, self.start_epoch))

    def _write_metrics(self):
        if self.run_dir:
            self.metrics.write_csv(join(self.run_dir, 'metrics.csv'))

    def fit(self, train_sets: Sequence[Dataset], val_sets: Sequence[Dataset] = ()) -> FitResult:
        data = TrainingSet.from_datasets(train_sets)
        schedule = self.config.schedule(data.n_steps)
        if self.run_dir:
            check_path(self.run_dir)

        start = time()
        n_epochs = self.config.epochs - self.start_epoch
        for epoch in range(self.start_epoch, self.config.epochs):
            self.optimizer.lr = step_decay_lr(epoch, self.config.lr, self.config.halve_every)
            stats = train_epoch(self.surrogate, self.optimizer, data, schedule, self.config, epoch)
            self.history.append(stats)
            for value, error in stats.param_nrmse.items():
                self.metrics.append((epoch, TRAIN, value, error, stats.lr, stats.k_trans, self.config_hash))

            improved = False
            if val_sets:
                report = evaluate(self.surrogate, val_sets, config_hash=self.config_hash)
                for row in report.rows:
                    self.metrics.append(
                        (epoch, VALIDATION, row.param, row.nrmse_mean, stats.lr, stats.k_trans, self.config_hash))
                val = report.mean_nrmse()
                if self.best_val is None or val < self.best_val:
                    self.best_val, improved = val, True

            done = epoch - self.start_epoch + 1
            logger.progress('Epoch {}/{}: lr {:.3g}, k_trans {}, loss {:.6g}{}'.format(
                epoch + 1, self.config.epochs, stats.lr, stats.k_trans, stats.loss,
                ', val {:.4g}'.format(self.best_val) if val_sets else ''), start, n_epochs, done)

            if self.run_dir:
                self._write_metrics()
                if improved:
                    self._checkpoint(BEST_CHECKPOINT, epoch)
                if (epoch + 1) % self.config.checkpoint_every == 0:
                    self._checkpoint('epoch_{:04d}.nnck'.format(epoch + 1), epoch)
                if (epoch + 1) % self.config.checkpoint_every == 0 or epoch + 1 == self.config.epochs:
                    self._checkpoint(LAST_CHECKPOINT, epoch)

        result = FitResult(self.history, self.metrics, self.best_val, time() - start)
        if self.run_dir:
            self.write_summary(result)
        return result

    def write_summary(self, result: FitResult):
        summary = {
            'config_hash': self.config_hash,
            'epochs': self.config.epochs,
            'train': asdict(self.config),
            'final_loss': result.history[-1].loss if result.history else None,
            'best_val': result.best_val,
            'parameter_counts': self.surrogate.parameter_counts(),
            'wall_clock': result.wall_clock,
        }
        ok, err = save_json(join(self.run_dir, 'train_summary.json'), summary)
        if not ok:
            raise OSError('Cannot write train summary: {}'.format(err))


def last_checkpoint(run_dir: str) -> Optional[str]:
    path = join(run_dir, LAST_CHECKPOINT)
    return path if exists(path) else None
