import numpy as np
import pytest

from surrogate_tools.decorators import ConfigError, ShapeError
from surrogate_tools.models.cnn import Cnn, CnnConfig, cnn_forward
from surrogate_tools.tensor import Tensor, no_grad


def test_shape_and_count(rng):
    model = Cnn(CnnConfig(in_channels=2, out_channels=1, channels=(4, 6), kernel=3), rng)
    assert model.parameter_count() == (4 * 2 * 3 + 4) + (6 * 4 * 3 + 6) + (1 * 6 * 3 + 1)
    with no_grad():
        assert cnn_forward(Tensor(rng.standard_normal((5, 2, 16))), model).shape == (5, 1, 16)
    with pytest.raises(ShapeError):
        model(Tensor(rng.standard_normal((5, 3, 16))))


def test_periodic_shift_equivariance(rng):
    model = Cnn(CnnConfig(in_channels=1, out_channels=1, channels=(4, 4), kernel=5), rng)
    x = rng.standard_normal((2, 1, 32))
    with no_grad():
        out = model(Tensor(x)).data
        shifted = model(Tensor(np.roll(x, 7, axis=-1))).data
    np.testing.assert_allclose(shifted, np.roll(out, 7, axis=-1), atol=1e-12)


def test_even_kernel_rejected():
    with pytest.raises(ConfigError):
        CnnConfig(kernel=4)
    with pytest.raises(ConfigError):
        CnnConfig(channels=())
