import json
import os

import numpy as np
import pytest

from surrogate_tools.decorators import ConfigError, DataError, TrainingDiverged
from surrogate_tools.models.cape import LAYERNORM, CapeConfig
from surrogate_tools.models.conditioning import CAPE, VANILLA, Surrogate
from surrogate_tools.optim import Adam
from surrogate_tools.pde.dataset import generate_group
from surrogate_tools.pde.grid import ADVECTION, TEST, TRAIN, VALIDATION, Grid1D
from surrogate_tools.tensor import Tape, backward, concat, no_grad
from surrogate_tools.training.evaluation import rollout
from surrogate_tools.training.losses import nrmse_values
from surrogate_tools.training.trainer import (
    LAST_CHECKPOINT, TrainConfig, Trainer, TrainingSet, batch_loss, last_checkpoint, train_epoch)

GRID = Grid1D(n_x=16, n_t=3, dt=0.05)
CONFIG = dict(epochs=3, lr=1e-2, batch_size=3, alpha=0.1, warmup_epochs=1, checkpoint_every=2, seed=4)


@pytest.fixture(scope='module')
def train_sets():
    return [generate_group(ADVECTION, p, 4, GRID, seed=3, split=TRAIN) for p in (0.5, 1.0)]


@pytest.fixture(scope='module')
def val_sets():
    return [generate_group(ADVECTION, 0.7, 2, GRID, seed=3, split=TEST)]


def _model(mode=CAPE, seed=0):
    cape = CapeConfig(d=4, kernel=3, modes=3, variant=LAYERNORM) if mode == CAPE else None
    return Surrogate.build('cnn', mode, 1, np.random.default_rng(seed), cnn=dict(channels=(4, ), kernel=3), cape=cape)


def _assert_same_state(a, b):
    state_b = b.state()
    for name, value in a.state().items():
        np.testing.assert_allclose(value, state_b[name], rtol=0, atol=1e-12, err_msg=name)


def test_fit_writes_run_files(train_sets, val_sets, tmp_path):
    run_dir = str(tmp_path / 'run')
    result = Trainer(_model(), TrainConfig(**CONFIG), run_dir, config_hash='h1').fit(train_sets, val_sets)

    assert sorted(os.listdir(run_dir)) == sorted(
        ['metrics.csv', 'epoch_0002.nnck', 'last.nnck', 'best.nnck', 'train_summary.json'])
    assert last_checkpoint(run_dir) == os.path.join(run_dir, LAST_CHECKPOINT)
    assert last_checkpoint(str(tmp_path)) is None

    assert len(result.history) == 3
    assert [stats.k_trans for stats in result.history] == [0, 0, 2]
    assert set(result.history[0].param_nrmse) == {0.5, 1.0}
    assert result.best_val is not None

    # two training parameters and one validation row per epoch
    assert len(result.metrics) == 9
    assert len(result.metrics.filtered(split=TRAIN)) == 6
    assert len(result.metrics.filtered(split=VALIDATION)) == 3
    with open(os.path.join(run_dir, 'train_summary.json')) as f:
        summary = json.load(f)
    assert summary['config_hash'] == 'h1'
    assert summary['parameter_counts']['cape'] > 0


def test_training_is_deterministic(train_sets):
    first, second = _model(), _model()
    Trainer(first, TrainConfig(**CONFIG)).fit(train_sets)
    Trainer(second, TrainConfig(**CONFIG)).fit(train_sets)
    _assert_same_state(first, second)


def test_resume_matches_uninterrupted_run(train_sets, tmp_path):
    run_dir = str(tmp_path / 'run')
    full = _model()
    full_result = Trainer(full, TrainConfig(**CONFIG), run_dir).fit(train_sets)

    resumed = _model(seed=77)
    trainer = Trainer(resumed, TrainConfig(**CONFIG), str(tmp_path / 'resumed'))
    trainer.resume(os.path.join(run_dir, 'epoch_0002.nnck'))
    assert trainer.start_epoch == 2
    result = trainer.fit(train_sets)

    assert len(result.history) == 1
    _assert_same_state(full, resumed)
    assert result.metrics == full_result.metrics


def test_teacher_forcing_and_autoregressive_losses(train_sets, rng):
    model = _model(VANILLA)
    u = train_sets[0].u[:3]
    params = np.full(3, 0.5)
    zero_noise = np.zeros(3)

    with no_grad():
        forced = batch_loss(model, u, params, 0, zero_noise, rng, alpha=0.0).item()
        chained = batch_loss(model, u, params, GRID.n_t, zero_noise, rng, alpha=0.0).item()
        expected_forced = 0.0
        for k in range(GRID.n_t):
            pred = rollout(model, u[:, k], params, 1)[:, 0]
            expected_forced += nrmse_values(pred, u[:, k + 1]).mean()
        frames = rollout(model, u[:, 0], params, GRID.n_t)

    expected_chained = sum(nrmse_values(frames[:, k], u[:, k + 1]).mean() for k in range(GRID.n_t))
    assert forced == pytest.approx(expected_forced, rel=1e-12)
    assert chained == pytest.approx(expected_chained, rel=1e-12)


def test_warm_up_trains_cape_only(train_sets):
    model = _model()
    before = model.state()
    Trainer(model, TrainConfig(**dict(CONFIG, epochs=1))).fit(train_sets)
    after = model.state()
    for name in before:
        if name.startswith('base.'):
            np.testing.assert_array_equal(after[name], before[name])
    assert any(not np.array_equal(after[name], before[name]) for name in model.cape_parameter_names())


def test_divergence_is_reported(train_sets):
    model = _model(VANILLA)
    for name, p in model.named_parameters().items():
        p.data *= 1e200
    with pytest.raises(TrainingDiverged) as e:
        Trainer(model, TrainConfig(**CONFIG)).fit(train_sets)
    assert e.value.epoch == 0
    assert e.value.k == 0


def test_invalid_inputs(train_sets):
    with pytest.raises(DataError):
        TrainingSet.from_datasets([])
    other = generate_group(ADVECTION, 0.5, 1, Grid1D(n_x=32, n_t=3, dt=0.05), seed=3, split=TRAIN)
    with pytest.raises(DataError):
        TrainingSet.from_datasets([train_sets[0], other])
    with pytest.raises(ConfigError):
        TrainConfig(val_fraction=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(mode='scheduled')


class _DuplicatedInput:
    """ Base network fed the channel pair (u, u) """

    def __init__(self, base):
        self.base = base
        self.config = base.config

    def __call__(self, x):
        return self.base(concat([x, x], axis=x.ndim - 2))

    def named_parameters(self, prefix=''):
        return self.base.named_parameters(prefix)


def test_zero_head_without_cape_loss_trains_base_on_duplicated_channels(train_sets):
    with_cape = _model()
    for name in ('cape.head.w', 'cape.head.b'):
        with_cape.named_parameters()[name].data[...] = 0.0
    plain = Surrogate(_DuplicatedInput(_model().base), VANILLA)
    base_names = [name for name in with_cape.named_parameters() if name.startswith('base.')]

    u = train_sets[0].u
    params = np.full(len(u), 0.5)
    noise_scale = 0.01 * u.reshape(len(u), -1).std(axis=1)
    models = (with_cape, plain)
    optimizers = [Adam(model.named_parameters(), lr=1e-2) for model in models]
    for step in range(3):
        losses = []
        for model, optimizer in zip(models, optimizers):
            model.zero_grad()
            with Tape():
                loss = batch_loss(model, u, params, 1, noise_scale, np.random.default_rng(step), alpha=0.0)
                backward(loss)
            # CAPE weights, head included, stay frozen
            optimizer.step(only=base_names)
            losses.append(loss.item())
        assert losses[0] == pytest.approx(losses[1], rel=1e-12)
    _assert_same_state(plain, with_cape)


def test_epoch_loss_ignores_batch_order_without_updates(train_sets):
    data = TrainingSet.from_datasets(train_sets)
    order = np.random.default_rng(5).permutation(len(data))
    config = TrainConfig(**dict(CONFIG, lr=0.0, noise=0.0, batch_size=2, warmup_epochs=0))
    schedule = config.schedule(data.n_steps)

    results = []
    for subset in (data, TrainingSet(data.u[order], data.params[order])):
        model = _model()
        before = _model()
        stats = train_epoch(model, Adam(model.named_parameters(), lr=0.0), subset, schedule, config, epoch=2)
        _assert_same_state(before, model)
        results.append(stats)

    assert results[0].k_trans == 2
    assert results[0].loss == pytest.approx(results[1].loss, rel=1e-12)
    assert results[0].param_nrmse == pytest.approx(results[1].param_nrmse, rel=1e-12)
