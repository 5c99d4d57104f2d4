"""
NNCK1 checkpoint container (little-endian):
    magic "NNCK1\\0" (6 bytes); u16 version = 1; u32 n_tensors;
    per tensor: u16 name_len + UTF-8 name, u8 ndim, u32 * ndim shape, f64 data (row-major);
    u32 json_len + UTF-8 JSON block (model/experiment config, optimizer scalars, epoch)

Model weights are named "base.*" and "cape.*"; Adam moments "adam.m.<param>" and "adam.v.<param>".
"""
from collections import OrderedDict
from typing import Any, Dict, Tuple

import numpy as np

from surrogate_tools.containers import BinaryReader, BinaryWriter, read_file
from surrogate_tools.decorators import FormatError
from surrogate_tools.optim import AdamState

MAGIC = b'NNCK1\x00'
VERSION = 1
ADAM_M = 'adam.m.'
ADAM_V = 'adam.v.'


def write_checkpoint(path: str, tensors: Dict[str, np.ndarray], meta: Dict[str, Any]):
    with open(path, 'wb') as f:
        writer = BinaryWriter(f)
        writer.raw(MAGIC)
        writer.pack('HI', VERSION, len(tensors))
        for name, value in tensors.items():
            value = np.asarray(value, dtype=np.float64)
            writer.text(name)
            writer.pack('B', value.ndim)
            writer.pack('I' * value.ndim, *value.shape)
            writer.floats(value)
        writer.json_block(meta)


def read_checkpoint(path: str) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    reader = BinaryReader(read_file(path), source=path)
    reader.magic(MAGIC)
    version, = reader.unpack('H', 'version')
    if version != VERSION:
        raise FormatError('{}: unsupported version {}'.format(path, version), offset=len(MAGIC))
    n_tensors, = reader.unpack('I', 'tensor count')

    tensors = OrderedDict()
    for _ in range(n_tensors):
        name_offset = reader.offset
        name = reader.text('tensor name')
        if name in tensors:
            raise FormatError('{}: duplicate tensor "{}"'.format(path, name), offset=name_offset)
        ndim, = reader.unpack('B', 'rank of "{}"'.format(name))
        shape = reader.unpack('I' * ndim, 'shape of "{}"'.format(name))
        size = int(np.prod(shape)) if shape else 1
        tensors[name] = reader.floats(size, 'data of "{}"'.format(name)).reshape(shape)
    meta = reader.json_block('config block')
    reader.finish()
    return tensors, meta


def adam_tensors(state: AdamState) -> Dict[str, np.ndarray]:
    result = OrderedDict()
    for name in state.m:
        result[ADAM_M + name] = state.m[name]
        result[ADAM_V + name] = state.v[name]
    return result


def adam_meta(state: AdamState) -> Dict[str, Any]:
    return {
        'lr': state.lr, 'beta1': state.beta1, 'beta2': state.beta2, 'eps': state.eps, 'step': state.step,
        'counts': dict(state.counts)}


def restore_adam(tensors: Dict[str, np.ndarray], meta: Dict[str, Any]) -> AdamState:
    state = AdamState(
        lr=meta['lr'], beta1=meta['beta1'], beta2=meta['beta2'], eps=meta['eps'], step=meta['step'])
    for name, count in meta['counts'].items():
        if ADAM_M + name not in tensors or ADAM_V + name not in tensors:
            raise FormatError('Checkpoint lacks Adam moments of "{}"'.format(name))
        state.m[name] = tensors[ADAM_M + name].copy()
        state.v[name] = tensors[ADAM_V + name].copy()
        state.counts[name] = int(count)
    return state


def model_tensors(tensors: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    return OrderedDict((name, value) for name, value in tensors.items() if not name.startswith('adam.'))
