"""
Minimal reverse-mode differentiable array engine.

Interfaces:
* Tensor - float64 n-dimensional array with an optional gradient buffer
* Tape - ordered record of the operations of one forward pass (define-by-run)
* no_grad - context manager disabling recording (inference, finite differences)
* backward - populates `grad` of every leaf reached from a scalar loss

Every operation is recorded on the active tape when at least one input requires a gradient.
Without an explicit `with Tape():` block a per-thread default tape is used; it is released by `backward`,
so the next forward pass starts a new one.

Binary operations accept equal shapes or a right-hand operand whose shape is a prefix of the
left-hand one (channel broadcast: a `(C,)` mask against `(C, X)` features, `(B, C)` against `(B, C, X)`).

USAGE EXAMPLE:

    x = Tensor([1.0, 2.0], requires_grad=True)
    loss = tsum(x * x)
    backward(loss)
    x.grad  # -> [2., 4.]
"""
import itertools
import threading
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

from surrogate_tools.decorators import NumericError, ShapeError, UnsupportedError

__all__ = (
    'Tensor', 'Tape', 'no_grad', 'backward', 'elementwise', 'add', 'sub', 'mul', 'div', 'scale', 'gelu', 'tanh',
    'sqrt', 'square', 'tsum', 'mean', 'reshape', 'concat', 'stack', 'take', 'as_tensor', 'is_grad_enabled', 'record_op',
)

ArrayLike = Union[np.ndarray, Sequence, float]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_INV_SQRT_2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

_state = threading.local()
_ids = itertools.count()


class Tensor:
    __slots__ = ('data', 'requires_grad', 'grad', 'name', '_tape', '_id')

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: str = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None  # type: Optional[np.ndarray]
        self.name = name
        self._tape = None  # type: Optional[Tape]
        self._id = next(_ids)

    @classmethod
    def _wrap(cls, data: np.ndarray) -> 'Tensor':
        obj = cls.__new__(cls)
        obj.data = data
        obj.requires_grad = False
        obj.grad = None
        obj.name = None
        obj._tape = None
        obj._id = next(_ids)
        return obj

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._tape is None

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError('item() needs a single-element tensor, got shape {}'.format(self.shape))
        return float(self.data.reshape(-1)[0])

    def detach(self) -> 'Tensor':
        """ Same values, cut from the tape """
        return Tensor._wrap(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return 'Tensor(shape={}, requires_grad={}{})'.format(
            self.shape, self.requires_grad, ', name={}'.format(self.name) if self.name else '')

    def __add__(self, other):
        return add(self, as_tensor(other))

    def __radd__(self, other):
        return add(as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, as_tensor(other))

    def __rsub__(self, other):
        return sub(as_tensor(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, as_tensor(other))

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(as_tensor(other), self)

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, 1.0 / other)
        return div(self, as_tensor(other))

    def __neg__(self):
        return scale(self, -1.0)


class Tape:
    """ Operation record of one forward pass. Records are kept in creation (topological) order """

    def __init__(self):
        self.records = []  # type: List[Tuple[Tensor, Tuple[Tensor, ...], BackwardFn]]
        self.consumed = False

    def __len__(self):
        return len(self.records)

    def __enter__(self):
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _stack().pop()

    def record(self, output: Tensor, inputs: Tuple[Tensor, ...], backward_fn: BackwardFn):
        if self.consumed:
            raise UnsupportedError('Tape already went through backward; call reset() first')
        self.records.append((output, inputs, backward_fn))

    def reset(self):
        self.records = []
        self.consumed = False


class no_grad:
    def __enter__(self):
        _state.no_grad = getattr(_state, 'no_grad', 0) + 1
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        _state.no_grad -= 1


def _stack() -> List[Tape]:
    if not hasattr(_state, 'stack'):
        _state.stack = []
    return _state.stack


def is_grad_enabled() -> bool:
    return not getattr(_state, 'no_grad', 0)


def _current_tape() -> Tape:
    stack = _stack()
    if stack:
        return stack[-1]
    tape = getattr(_state, 'default', None)
    if tape is None or tape.consumed:
        tape = _state.default = Tape()
    return tape


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data: np.ndarray, inputs: Tuple[Tensor, ...], backward_fn: BackwardFn, op: str) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericError('Non-finite output of "{}"'.format(op))

    out = Tensor._wrap(data)
    if not is_grad_enabled() or not any(t.requires_grad for t in inputs):
        return out

    tape = _current_tape()
    for t in inputs:
        if t.requires_grad and t._tape is not None and t._tape is not tape:
            raise UnsupportedError('Input of "{}" belongs to another tape; detach() it first'.format(op))
    out.requires_grad = True
    out._tape = tape
    tape.record(out, inputs, backward_fn)
    return out


def record_op(data: np.ndarray, inputs: Sequence[Tensor], backward_fn: BackwardFn, op: str) -> Tensor:
    """ Entry point for fused operations defined outside this module (layers, spectral) """
    return _result(data, tuple(inputs), backward_fn, op)


def backward(loss: Tensor):
    """
    Reverse pass over the tape that produced `loss`.
    Leaf gradients are accumulated into `.grad`; the tape cannot be replayed afterwards.
    """
    if loss.size != 1:
        raise ShapeError('backward() needs a scalar loss, got shape {}'.format(loss.shape))
    tape = loss._tape
    if tape is None:
        raise UnsupportedError('Loss is not attached to a tape (no input requires grad)')
    if tape.consumed:
        raise UnsupportedError('Backward was already run on this tape; higher-order or repeated passes unsupported')

    grads = {loss._id: np.ones_like(loss.data)}
    for out, inputs, backward_fn in reversed(tape.records):
        g = grads.pop(out._id, None)
        if g is None:
            continue
        for t, gi in zip(inputs, backward_fn(g)):
            if gi is None or not t.requires_grad:
                continue
            if t._tape is None:
                t.grad = np.array(gi, dtype=np.float64) if t.grad is None else t.grad + gi
            else:
                grads[t._id] = gi if t._id not in grads else grads[t._id] + gi

    tape.consumed = True
    tape.records = []
    if getattr(_state, 'default', None) is tape:
        _state.default = None


# ============================ broadcasting ============================

def _is_prefix(small: Tuple[int, ...], big: Tuple[int, ...]) -> bool:
    return len(small) <= len(big) and big[:len(small)] == small


def _expand(data: np.ndarray, ndim: int) -> np.ndarray:
    return data.reshape(data.shape + (1, ) * (ndim - data.ndim))


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return g.sum(axis=tuple(range(len(shape), g.ndim))).reshape(shape)


def _binary_operands(a: Tensor, b: Tensor, op: str) -> Tuple[np.ndarray, np.ndarray]:
    if a.shape == b.shape:
        return a.data, b.data
    if _is_prefix(b.shape, a.shape):
        return a.data, _expand(b.data, a.ndim)
    if _is_prefix(a.shape, b.shape):
        return _expand(a.data, b.ndim), b.data
    raise ShapeError('"{}": shapes {} and {} are not channel-broadcastable'.format(op, a.shape, b.shape))


# ============================ elementwise ============================

def elementwise(kind: str, a: Tensor, b: Tensor = None, factor: float = None) -> Tensor:
    """
    Dispatches elementwise operations by name

    :param kind: one of add, sub, mul, div (binary); gelu, tanh, sqrt, square (unary); scale (needs `factor`)
    """
    binary = {'add': add, 'sub': sub, 'mul': mul, 'div': div}
    unary = {'gelu': gelu, 'tanh': tanh, 'sqrt': sqrt, 'square': square}
    if kind in binary:
        if b is None:
            raise ShapeError('"{}" needs two operands'.format(kind))
        return binary[kind](a, b)
    if kind in unary:
        return unary[kind](a)
    if kind == 'scale':
        return scale(a, factor)
    raise UnsupportedError('Unknown elementwise operation "{}"'.format(kind))


def add(a: Tensor, b: Tensor) -> Tensor:
    x, y = _binary_operands(a, b, 'add')

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result(x + y, (a, b), backward_fn, 'add')


def sub(a: Tensor, b: Tensor) -> Tensor:
    x, y = _binary_operands(a, b, 'sub')

    def backward_fn(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return _result(x - y, (a, b), backward_fn, 'sub')


def mul(a: Tensor, b: Tensor) -> Tensor:
    x, y = _binary_operands(a, b, 'mul')

    def backward_fn(g):
        return _unbroadcast(g * y, a.shape), _unbroadcast(g * x, b.shape)

    return _result(x * y, (a, b), backward_fn, 'mul')


def div(a: Tensor, b: Tensor) -> Tensor:
    x, y = _binary_operands(a, b, 'div')
    with np.errstate(divide='ignore', invalid='ignore'):
        out = x / y

    def backward_fn(g):
        return _unbroadcast(g / y, a.shape), _unbroadcast(-g * out / y, b.shape)

    return _result(out, (a, b), backward_fn, 'div')


def scale(a: Tensor, factor: float) -> Tensor:
    factor = float(factor)

    def backward_fn(g):
        return g * factor,

    return _result(a.data * factor, (a, ), backward_fn, 'scale')


def gelu(a: Tensor) -> Tensor:
    """ Exact GeLU: x * Phi(x) """
    x = a.data
    cdf = 0.5 * (1.0 + erf(x * _INV_SQRT_2))

    def backward_fn(g):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return g * (cdf + x * pdf),

    return _result(x * cdf, (a, ), backward_fn, 'gelu')


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def backward_fn(g):
        return g * (1.0 - out * out),

    return _result(out, (a, ), backward_fn, 'tanh')


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)

    def backward_fn(g):
        # d sqrt(x) at x = 0 is taken as 0
        safe = np.where(out > 0, out, 1.0)
        return np.where(out > 0, g * 0.5 / safe, 0.0),

    return _result(out, (a, ), backward_fn, 'sqrt')


def square(a: Tensor) -> Tensor:
    x = a.data

    def backward_fn(g):
        return 2.0 * g * x,

    return _result(x * x, (a, ), backward_fn, 'square')


# ============================ reductions / shaping ============================

def _normalize_axes(axes, ndim) -> Tuple[int, ...]:
    if axes is None:
        return tuple(range(ndim))
    if isinstance(axes, int):
        axes = (axes, )
    return tuple(sorted(ax % ndim for ax in axes))


def tsum(a: Tensor, axes=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axes, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def backward_fn(g):
        if not keepdims:
            g = g.reshape([1 if ax in axes else n for ax, n in enumerate(a.shape)])
        return np.broadcast_to(g, a.shape).copy(),

    return _result(np.asarray(out, dtype=np.float64), (a, ), backward_fn, 'sum')


def mean(a: Tensor, axes=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axes, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return scale(tsum(a, axes, keepdims), 1.0 / count)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    def backward_fn(g):
        return g.reshape(a.shape),

    return _result(a.data.reshape(shape), (a, ), backward_fn, 'reshape')


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    axis = axis % tensors[0].ndim
    ref = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(ref) or t.shape[:axis] + t.shape[axis + 1:] != ref[:axis] + ref[axis + 1:]:
            raise ShapeError('concat along axis {}: incompatible shapes {} and {}'.format(axis, ref, t.shape))
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def backward_fn(g):
        return tuple(np.take(g, np.arange(lo, hi), axis=axis) for lo, hi in zip(bounds[:-1], bounds[1:]))

    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward_fn, 'concat')


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    ref = tensors[0].shape
    if any(t.shape != ref for t in tensors):
        raise ShapeError('stack needs equal shapes, got {}'.format([t.shape for t in tensors]))
    axis = axis % (len(ref) + 1)

    def backward_fn(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return _result(np.stack([t.data for t in tensors], axis=axis), tensors, backward_fn, 'stack')


def take(a: Tensor, index: Union[int, slice], axis: int = 0) -> Tensor:
    """ Basic indexing along one axis (integer drops the axis, slice keeps it) """
    axis = axis % a.ndim
    selector = (slice(None), ) * axis + (index, )

    def backward_fn(g):
        full = np.zeros_like(a.data)
        full[selector] = g
        return full,

    return _result(a.data[selector].copy(), (a, ), backward_fn, 'take')
