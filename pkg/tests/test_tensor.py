import numpy as np
import pytest

from surrogate_tools.decorators import NumericError, ShapeError, UnsupportedError
from surrogate_tools.gradcheck import grad_check
from surrogate_tools.tensor import (
    Tape, Tensor, backward, concat, div, elementwise, gelu, mean, no_grad, reshape, sqrt, square, stack, take, tanh,
    tsum)


def test_backward_of_square_sum():
    x = Tensor([1.0, 2.0, -3.0], requires_grad=True)
    backward(tsum(x * x))
    np.testing.assert_allclose(x.grad, [2.0, 4.0, -6.0])


def test_gradients_accumulate_over_reused_inputs():
    x = Tensor([3.0], requires_grad=True)
    backward(tsum(x * x + x * 2.0))
    np.testing.assert_allclose(x.grad, [8.0])


def test_prefix_broadcast():
    a = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    b = Tensor([10.0, 20.0], requires_grad=True)
    out = a * b
    np.testing.assert_allclose(out.data, [[0.0, 10.0, 20.0], [60.0, 80.0, 100.0]])
    backward(tsum(out))
    np.testing.assert_allclose(b.grad, [3.0, 12.0])
    np.testing.assert_allclose(a.grad, [[10.0] * 3, [20.0] * 3])

    with pytest.raises(ShapeError):
        a + Tensor([1.0, 2.0, 3.0])


def test_non_finite_output_raises():
    with pytest.raises(NumericError):
        div(Tensor([1.0]), Tensor([0.0]))


def test_tape_is_consumed_by_backward():
    x = Tensor([1.0], requires_grad=True)
    loss = tsum(x * x)
    backward(loss)
    with pytest.raises(UnsupportedError):
        backward(loss)
    # next forward pass records on a fresh default tape
    backward(tsum(x * 3.0))
    np.testing.assert_allclose(x.grad, [5.0])


def test_no_grad_records_nothing():
    x = Tensor([1.0], requires_grad=True)
    with no_grad():
        y = x * x
    assert not y.requires_grad and y.is_leaf
    with pytest.raises(UnsupportedError):
        backward(tsum(y))


def test_detach_and_item():
    x = Tensor([2.0], requires_grad=True)
    with Tape():
        y = (x * x).detach()
    assert not y.requires_grad
    assert y.item() == 4.0
    with pytest.raises(ShapeError):
        Tensor([1.0, 2.0]).item()


def test_elementwise_dispatch():
    a, b = Tensor([1.0, 4.0]), Tensor([2.0, 2.0])
    np.testing.assert_allclose(elementwise('sub', a, b).data, [-1.0, 2.0])
    np.testing.assert_allclose(elementwise('sqrt', a).data, [1.0, 2.0])
    np.testing.assert_allclose(elementwise('scale', a, factor=0.5).data, [0.5, 2.0])
    with pytest.raises(UnsupportedError):
        elementwise('pow', a, b)


def test_gelu_values():
    out = gelu(Tensor([0.0, 1.0, -1.0])).data
    np.testing.assert_allclose(out, [0.0, 0.8413447460685429, -0.15865525393145707], rtol=1e-12)


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_unary_and_binary_gradients(seed):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.uniform(0.5, 2.0, size=(3, 4)))
    y = Tensor(rng.uniform(0.5, 2.0, size=(3, )))

    def f(x, y):
        return tsum(gelu(x) * tanh(x) + div(sqrt(x), y) - square(x) * y)

    assert grad_check(f, [x, y]) < 1e-6


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_shaping_gradients(seed):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal((2, 3, 4)))
    y = Tensor(rng.standard_normal((2, 2, 4)))

    def f(x, y):
        joined = concat([x, y], axis=1)
        # index 4 along axis 1 lives in the second concat operand
        pair = stack([take(joined, 0, axis=1), take(joined, 4, axis=1)], axis=0)
        middle = take(joined, slice(1, 3), axis=1)
        return (mean(square(reshape(joined, (4, -1)))) + tsum(square(pair))
                + tsum(tsum(middle * middle, axes=2, keepdims=True)))

    assert grad_check(f, [x, y]) < 1e-6
    with pytest.raises(ShapeError):
        stack([x, y])
