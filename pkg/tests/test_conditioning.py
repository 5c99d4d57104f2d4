import numpy as np
import pytest

from surrogate_tools.decorators import ConfigError, ShapeError
from surrogate_tools.models.cape import CapeConfig
from surrogate_tools.models.conditioning import (
    CAPE, CONDITIONAL, PREV2, VANILLA, Surrogate, base_in_channels, make_conditional_input, make_prev2_input)
from surrogate_tools.tensor import Tensor, no_grad

FNO = dict(width=4, modes=3, n_layers=1, projection=4)


def test_conditional_channel(rng):
    u = Tensor(rng.standard_normal((2, 1, 8)))
    x = make_conditional_input(u, np.array([0.5, 2.0]))
    assert x.shape == (2, 2, 8)
    np.testing.assert_allclose(x.data[:, 1], [[0.5] * 8, [2.0] * 8])
    assert make_conditional_input(Tensor(np.zeros((1, 8))), 0.3).shape == (2, 8)
    with pytest.raises(ShapeError):
        make_conditional_input(u, np.array([0.5, 2.0, 3.0]))


def test_prev2_input(rng):
    a, b = Tensor(rng.standard_normal((2, 1, 8))), Tensor(rng.standard_normal((2, 1, 8)))
    x = make_prev2_input(a, b)
    np.testing.assert_allclose(x.data[:, 1], b.data[:, 0])
    with pytest.raises(ShapeError):
        make_prev2_input(a, Tensor(np.zeros((2, 1, 4))))


def test_in_channels():
    assert base_in_channels(VANILLA, 1) == 1
    assert base_in_channels(CONDITIONAL, 1) == 2
    assert base_in_channels(PREV2, 2) == 4
    assert base_in_channels(CAPE, 1, ell=3) == 4
    with pytest.raises(ConfigError):
        base_in_channels('film', 1)


@pytest.mark.parametrize('mode', [VANILLA, CONDITIONAL, PREV2, CAPE])
def test_surrogate_modes(mode, rng):
    cape = CapeConfig(d=4, kernel=3, modes=3) if mode == CAPE else None
    model = Surrogate.build('fno', mode, 1, rng, fno=FNO, cape=cape)
    u = Tensor(rng.standard_normal((2, 1, 8)))
    with no_grad():
        pred, cape_out = model.step(u, np.array([0.1, 0.2]), u if mode == PREV2 else None)
    assert pred.shape == (2, 1, 8)
    assert (cape_out is not None) == (mode == CAPE)
    assert model.uses_previous == (mode == PREV2)

    counts = model.parameter_counts()
    assert counts['total'] == counts['base'] + counts['cape']
    assert (counts['cape'] > 0) == (mode == CAPE)
    assert all(name.startswith(('base.', 'cape.')) for name in model.named_parameters())


def test_prev2_needs_previous_frame(rng):
    model = Surrogate.build('cnn', PREV2, 1, rng, cnn=dict(channels=(2, ), kernel=3))
    with pytest.raises(ShapeError):
        model.step(Tensor(np.zeros((1, 1, 8))), np.array([0.1]))


def test_state_roundtrip(rng):
    model = Surrogate.build('cnn', CAPE, 1, rng, cnn=dict(channels=(2, ), kernel=3), cape=CapeConfig(d=4, modes=3))
    other = Surrogate.build('cnn', CAPE, 1, np.random.default_rng(99), cnn=dict(channels=(2, ), kernel=3),
                            cape=CapeConfig(d=4, modes=3))
    other.load_state(model.state())
    for name, p in other.named_parameters().items():
        np.testing.assert_array_equal(p.data, model.named_parameters()[name].data)

    state = model.state()
    state.pop('cape.g1.w')
    with pytest.raises(ShapeError):
        other.load_state(state)


def test_build_checks(rng):
    with pytest.raises(ConfigError):
        Surrogate.build('unet', VANILLA, 1, rng)
    with pytest.raises(ConfigError):
        Surrogate.build('fno', CAPE, 1, rng, fno=FNO)
