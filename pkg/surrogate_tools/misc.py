"""
Small helpers shared by the package: console output, durations, JSON/CSV writing, hashing, paths.

JSON helpers return (result, error) pairs instead of raising; callers decide which error type a failure maps to.
"""
import hashlib
import json
import os
import sys
from datetime import datetime
from time import time
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

CHUNK_SIZE = 1 << 23
# durations above this many seconds are shown in minutes
MINUTES_FROM = 120.0


def proc_print(mess: str, timestamp: bool = True):
    prefix = '[{}] '.format(datetime.now().strftime('%Y-%m-%d %H:%M:%S')) if timestamp else ''
    print('{}[{}] {}'.format(prefix, os.path.basename(sys.argv[0]), mess))  # noqa: T001


def duration_str(seconds: float) -> str:
    if seconds > MINUTES_FROM:
        return '{:.1f} min'.format(seconds / 60.0)
    return '{:.2f} sec'.format(seconds)


def elapsed_str(start: float) -> str:
    return duration_str(max(0.0, time() - start))


def estimated_str(start: float, total: int, done: int, left: bool = False) -> str:
    """ Projected duration of the whole job (or of what is left) from the share already done """
    elapsed = max(0.0, time() - start)
    projected = elapsed * float(total) / max(done, 1)
    return duration_str(max(0.0, projected - elapsed) if left else projected)


def to_serializable(src: Any) -> Any:
    if isinstance(src, np.generic):
        return src.item()
    if isinstance(src, np.ndarray):
        return src.tolist()
    if isinstance(src, dict):
        return {key: to_serializable(value) for key, value in src.items()}
    if isinstance(src, (list, tuple)):
        return [to_serializable(value) for value in src]
    return src


def deep_update(obj: Dict, update: Dict):
    """ In-place merge, nested dicts are merged key by key and everything else is replaced """
    for key, value in update.items():
        current = obj.get(key)
        if isinstance(current, dict) and isinstance(value, dict):
            deep_update(current, value)
        else:
            obj[key] = value


def canonical_json(data) -> str:
    """ Key-sorted compact JSON, stable across runs (used for hashing and embedding) """
    return json.dumps(to_serializable(data), sort_keys=True, separators=(',', ':'))


def get_text_hash(text: str) -> str:
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def get_config_hash(config: Dict) -> str:
    return get_text_hash(canonical_json(config))[:16]


def to_csv_value(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    text = str(value)
    if isinstance(value, str) and (',' in text or '"' in text):
        return '"{}"'.format(text.replace('"', '""'))
    return text


def write_to_io(dst_io, *args):
    dst_io.write(','.join(to_csv_value(arg) for arg in args) + '\n')


def load_json(filename: str) -> Tuple[Optional[Any], Optional[str]]:
    try:
        with open(filename, 'r', encoding='utf-8') as f:
            return json.load(f), None
    except (OSError, ValueError) as e:
        return None, str(e)


def save_json(filename: str, data, indent: int = 2) -> Tuple[bool, Optional[str]]:
    """ Writes next to the target first, so readers never see a half-written file """
    tmp_name = '{}.tmp'.format(filename)
    try:
        with open(tmp_name, 'w', encoding='utf-8') as f:
            json.dump(to_serializable(data), f, indent=indent, sort_keys=True)
        os.replace(tmp_name, filename)
        return True, None
    except (OSError, TypeError, ValueError) as e:
        return False, str(e)


def check_path(src_path: str):
    os.makedirs(src_path, exist_ok=True)


def file_checksum(location: str) -> str:
    """ SHA-256 hex digest, read in chunks """
    hash_obj = hashlib.sha256()
    with open(location, 'rb') as f:
        for chunk in iter(lambda: f.read(CHUNK_SIZE), b''):
            hash_obj.update(chunk)
    return hash_obj.hexdigest()


def check_file_checksum(location: str, checksum: str) -> bool:
    return file_checksum(location) == checksum


def is_power_of_two(value: Union[int, np.integer]) -> bool:
    return value > 0 and (value & (value - 1)) == 0
