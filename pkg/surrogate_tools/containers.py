"""
Little-endian binary container primitives shared by the dataset (PDEB1) and checkpoint (NNCK1) files.
Every read failure is reported as FormatError carrying the byte offset where it happened.
"""
import json
import struct
from typing import Any, BinaryIO, Dict, Tuple

import numpy as np

from surrogate_tools.decorators import FormatError
from surrogate_tools.misc import canonical_json

F64 = np.dtype('<f8')


class BinaryWriter:
    def __init__(self, stream: BinaryIO):
        self.stream = stream

    def raw(self, data: bytes):
        self.stream.write(data)

    def pack(self, fmt: str, *values):
        self.stream.write(struct.pack('<' + fmt, *values))

    def floats(self, array: np.ndarray):
        self.stream.write(np.ascontiguousarray(array, dtype=F64).tobytes())

    def text(self, value: str, length_fmt: str = 'H'):
        encoded = value.encode('utf-8')
        self.pack(length_fmt, len(encoded))
        self.raw(encoded)

    def json_block(self, data: Dict[str, Any]):
        self.text(canonical_json(data), length_fmt='I')


class BinaryReader:
    def __init__(self, data: bytes, source: str = '<memory>'):
        self.data = data
        self.offset = 0
        self.source = source

    def _take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            raise FormatError('{}: truncated while reading {}'.format(self.source, what), offset=self.offset)
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def magic(self, expected: bytes):
        found = self._take(len(expected), 'magic')
        if found != expected:
            raise FormatError('{}: bad magic {!r}, expected {!r}'.format(self.source, found, expected), offset=0)

    def unpack(self, fmt: str, what: str) -> Tuple:
        fmt = '<' + fmt
        return struct.unpack(fmt, self._take(struct.calcsize(fmt), what))

    def floats(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self._take(count * F64.itemsize, what), dtype=F64).astype(np.float64)

    def text(self, what: str, length_fmt: str = 'H') -> str:
        length, = self.unpack(length_fmt, what + ' length')
        start = self.offset
        try:
            return self._take(length, what).decode('utf-8')
        except UnicodeDecodeError:
            raise FormatError('{}: {} is not UTF-8'.format(self.source, what), offset=start)

    def json_block(self, what: str = 'metadata') -> Dict[str, Any]:
        start = self.offset
        text = self.text(what, length_fmt='I')
        try:
            return json.loads(text)
        except ValueError:
            raise FormatError('{}: {} is not valid JSON'.format(self.source, what), offset=start)

    def finish(self):
        if self.offset != len(self.data):
            raise FormatError('{}: {} trailing bytes'.format(self.source, len(self.data) - self.offset), offset=self.offset)


def read_file(path: str) -> bytes:
    with open(path, 'rb') as f:
        return f.read()
