import io

import numpy as np

from surrogate_tools.misc import (
    canonical_json, check_file_checksum, deep_update, duration_str, file_checksum, get_config_hash, is_power_of_two,
    load_json, save_json, to_serializable, write_to_io)


def test_canonical_json_is_key_sorted_and_compact():
    assert canonical_json({'b': 1, 'a': [np.float64(0.5), np.int64(2)]}) == '{"a":[0.5,2],"b":1}'


def test_config_hash_ignores_key_order():
    h1 = get_config_hash({'a': 1, 'b': {'c': 2, 'd': 3}})
    h2 = get_config_hash({'b': {'d': 3, 'c': 2}, 'a': 1})
    assert h1 == h2 and len(h1) == 16
    assert get_config_hash({'a': 2}) != h1


def test_deep_update_merges_nested_sections():
    obj = {'data': {'kind': 'burgers', 'grid': {'n_x': 128, 'n_t': 40}}, 'run': {}}
    deep_update(obj, {'data': {'grid': {'n_x': 64}}, 'run': {'output_dir': 'x'}})
    assert obj == {'data': {'kind': 'burgers', 'grid': {'n_x': 64, 'n_t': 40}}, 'run': {'output_dir': 'x'}}


def test_to_serializable_converts_numpy():
    assert to_serializable({'a': np.arange(3), 'b': (np.float32(1.5), )}) == {'a': [0, 1, 2], 'b': [1.5]}


def test_write_to_io_quotes_and_floats():
    dst = io.StringIO()
    write_to_io(dst, 'a,b', 'plain', 0.1, None, 3, True)
    assert dst.getvalue() == '"a,b",plain,0.1,,3,True\n'


def test_json_and_checksum_roundtrip(tmp_path):
    path = str(tmp_path / 'x.json')
    ok, err = save_json(path, {'value': np.float64(1.25)})
    assert ok and err is None
    data, err = load_json(path)
    assert data == {'value': 1.25} and err is None
    checksum = file_checksum(path)
    assert len(checksum) == 64 and check_file_checksum(path, checksum)

    data, err = load_json(str(tmp_path / 'missing.json'))
    assert data is None and err


def test_power_of_two():
    assert [n for n in range(1, 20) if is_power_of_two(n)] == [1, 2, 4, 8, 16]
    assert not is_power_of_two(0)


def test_duration_switches_to_minutes():
    assert duration_str(1.5) == '1.50 sec'
    assert duration_str(120.0) == '120.00 sec'
    assert duration_str(300.0) == '5.0 min'


def test_save_json_leaves_no_temporary_file(tmp_path):
    path = tmp_path / 'summary.json'
    ok, _ = save_json(str(path), {'a': 1})
    assert ok and [p.name for p in tmp_path.iterdir()] == ['summary.json']

    ok, err = save_json(str(tmp_path / 'missing' / 'x.json'), {})
    assert not ok and err
