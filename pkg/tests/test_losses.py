import numpy as np
import pytest

from surrogate_tools.decorators import DegenerateTargetError, ShapeError
from surrogate_tools.gradcheck import grad_check
from surrogate_tools.tensor import Tensor
from surrogate_tools.training.losses import cape_loss, nrmse, nrmse_values


def test_relative_error(rng):
    truth = rng.standard_normal((3, 1, 16))
    assert nrmse(Tensor(truth * 1.1), truth).item() == pytest.approx(0.1)
    assert nrmse(Tensor(truth), truth).item() == 0.0
    np.testing.assert_allclose(nrmse_values(truth * 0.5, truth), [0.5] * 3)
    # single sample without batch axis
    assert nrmse(Tensor(truth[0] * 2.0), truth[0]).item() == pytest.approx(1.0)


def test_batch_average(rng):
    truth = rng.standard_normal((2, 1, 16))
    pred = truth.copy()
    pred[1] *= 1.4
    assert nrmse(Tensor(pred), truth).item() == pytest.approx(0.2)


def test_invalid_targets(rng):
    truth = rng.standard_normal((2, 1, 16))
    truth[1] = 0.0
    with pytest.raises(DegenerateTargetError):
        nrmse(Tensor(np.ones((2, 1, 16))), truth)
    with pytest.raises(DegenerateTargetError):
        nrmse_values(np.ones((2, 1, 16)), truth)
    with pytest.raises(ShapeError):
        nrmse(Tensor(np.ones((2, 1, 8))), truth)


def test_nrmse_gradient(rng):
    pred = Tensor(rng.standard_normal((2, 1, 8)))
    truth = rng.standard_normal((2, 1, 8))
    assert grad_check(lambda p: nrmse(p, truth), pred) < 1e-6


def test_cape_loss_terms(rng):
    future = rng.standard_normal((2, 3, 1, 8))
    intermediates = Tensor(future[:, :2] * np.array([1.1, 1.3])[None, :, None, None])
    assert cape_loss(intermediates, future).item() == pytest.approx(0.1 + 0.3)
    # only one true frame left
    assert cape_loss(intermediates, future[:, :1]).item() == pytest.approx(0.1)
    assert cape_loss(intermediates, future[:, :0]).item() == 0.0


@pytest.mark.parametrize('scale', [-4.0, -1.0, 0.3, 25.0])
def test_joint_scaling_invariance(scale, rng):
    truth = rng.standard_normal((3, 1, 16))
    pred = truth + 0.2 * rng.standard_normal((3, 1, 16))
    reference = nrmse(Tensor(pred), truth).item()
    assert nrmse(Tensor(scale * pred), scale * truth).item() == pytest.approx(reference, rel=1e-12)
    np.testing.assert_allclose(nrmse_values(scale * pred, scale * truth), nrmse_values(pred, truth), rtol=1e-12)
