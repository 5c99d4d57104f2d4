import numpy as np
import pytest

from surrogate_tools.decorators import FormatError
from surrogate_tools.models.checkpoint import (
    MAGIC, adam_meta, adam_tensors, model_tensors, read_checkpoint, restore_adam, write_checkpoint)
from surrogate_tools.optim import Adam
from surrogate_tools.tensor import Tensor


def test_roundtrip(rng, tmp_path):
    path = str(tmp_path / 'model.nnck')
    tensors = {'base.w': rng.standard_normal((3, 2)), 'cape.b': rng.standard_normal(4), 'scalar': np.array(1.5)}
    meta = {'epoch': 3, 'config': {'model': {'kind': 'fno'}}}
    write_checkpoint(path, tensors, meta)

    loaded, loaded_meta = read_checkpoint(path)
    assert list(loaded) == list(tensors)
    for name, value in tensors.items():
        np.testing.assert_array_equal(loaded[name], value)
    assert loaded_meta == meta


def test_adam_state_roundtrip(rng, tmp_path):
    params = {'base.w': Tensor(rng.standard_normal(3), requires_grad=True)}
    optimizer = Adam(params, lr=0.01)
    params['base.w'].grad = np.ones(3)
    optimizer.step()

    path = str(tmp_path / 'model.nnck')
    tensors = dict({name: p.data for name, p in params.items()}, **adam_tensors(optimizer.state))
    write_checkpoint(path, tensors, {'adam': adam_meta(optimizer.state)})
    loaded, meta = read_checkpoint(path)

    assert list(model_tensors(loaded)) == ['base.w']
    state = restore_adam(loaded, meta['adam'])
    assert state.step == 1 and state.counts == {'base.w': 1} and state.lr == 0.01
    np.testing.assert_array_equal(state.m['base.w'], optimizer.state.m['base.w'])

    del loaded['adam.v.base.w']
    with pytest.raises(FormatError):
        restore_adam(loaded, meta['adam'])


def test_corrupted(rng, tmp_path):
    path = str(tmp_path / 'model.nnck')
    write_checkpoint(path, {'w': rng.standard_normal(4)}, {})
    with open(path, 'rb') as f:
        data = f.read()

    with open(path, 'wb') as f:
        f.write(b'PDEB1\x00' + data[len(MAGIC):])
    with pytest.raises(FormatError):
        read_checkpoint(path)

    with open(path, 'wb') as f:
        f.write(data[:-3])
    with pytest.raises(FormatError):
        read_checkpoint(path)

    with open(path, 'wb') as f:
        f.write(data + b'\x00')
    with pytest.raises(FormatError):
        read_checkpoint(path)
