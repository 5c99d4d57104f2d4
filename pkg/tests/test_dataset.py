import os

import numpy as np
import pytest

from surrogate_tools.decorators import ConfigError, FormatError
from surrogate_tools.misc import canonical_json
from surrogate_tools.pde.dataset import (
    HEADER_SIZE, MAGIC, dataset_path, generate_dataset, generate_group, read_dataset,
    trajectory_seeds, write_dataset)
from surrogate_tools.pde.grid import ADVECTION, BURGERS, TEST, TRAIN, Grid1D


@pytest.fixture
def advection_group(small_grid):
    return generate_group(ADVECTION, 0.625, 3, small_grid, seed=7, split=TRAIN)


def test_group_contents(advection_group, small_grid):
    assert advection_group.u.shape == (3, 5, 1, 32)
    assert advection_group.params.value == 0.625
    assert advection_group.metadata['seed'] == 7
    assert advection_group.metadata['generator']['solver'] == 'spectral_shift'
    # trajectories differ, each starts from a normalized field
    assert not np.allclose(advection_group.u[0], advection_group.u[1])
    np.testing.assert_allclose(np.max(np.abs(advection_group.u[:, 0]), axis=-1), 1.0)


def test_seeds_depend_on_group_identity():
    first = trajectory_seeds(0, BURGERS, TRAIN, 0.1, 2)
    again = trajectory_seeds(0, BURGERS, TRAIN, 0.1, 2)
    assert [s.generate_state(2).tolist() for s in first] == [s.generate_state(2).tolist() for s in again]
    for other in (trajectory_seeds(0, BURGERS, TEST, 0.1, 2), trajectory_seeds(0, BURGERS, TRAIN, 0.2, 2),
                  trajectory_seeds(1, BURGERS, TRAIN, 0.1, 2), trajectory_seeds(0, ADVECTION, TRAIN, 0.1, 2)):
        assert other[0].generate_state(2).tolist() != first[0].generate_state(2).tolist()


def test_roundtrip_and_size(advection_group, tmp_path):
    path = str(tmp_path / 'group.pdeb')
    write_dataset(path, advection_group)
    metadata_len = len(canonical_json(dict(advection_group.metadata, split=TRAIN)).encode())
    assert os.path.getsize(path) == HEADER_SIZE + 3 * 5 * 1 * 32 * 8 + 4 + metadata_len

    loaded = read_dataset(path)
    np.testing.assert_array_equal(loaded.u, advection_group.u)
    assert loaded.params == advection_group.params
    assert loaded.grid == advection_group.grid
    assert loaded.split == TRAIN
    assert loaded.metadata == advection_group.metadata


def _corrupt(path, offset, data):
    with open(path, 'r+b') as f:
        f.seek(offset)
        f.write(data)


def test_corrupted_files(advection_group, tmp_path):
    path = str(tmp_path / 'group.pdeb')

    write_dataset(path, advection_group)
    _corrupt(path, 0, b'X')
    with pytest.raises(FormatError) as e:
        read_dataset(path)
    assert e.value.offset == 0

    write_dataset(path, advection_group)
    _corrupt(path, len(MAGIC), b'\x02\x00')
    with pytest.raises(FormatError) as e:
        read_dataset(path)
    assert e.value.offset == len(MAGIC)

    write_dataset(path, advection_group)
    _corrupt(path, len(MAGIC) + 2, b'\x09')
    with pytest.raises(FormatError):
        read_dataset(path)

    write_dataset(path, advection_group)
    with open(path, 'ab') as f:
        f.write(b'\x00')
    with pytest.raises(FormatError):
        read_dataset(path)

    write_dataset(path, advection_group)
    with open(path, 'rb') as f:
        data = f.read()
    with open(path, 'wb') as f:
        f.write(data[:HEADER_SIZE + 10])
    with pytest.raises(FormatError):
        read_dataset(path)


def test_generate_dataset_writes_one_file_per_param(small_grid, tmp_path):
    out_dir = str(tmp_path / 'data')
    written = generate_dataset(ADVECTION, [0.2, 0.4], 2, small_grid, seed=1, split=TRAIN, out_dir=out_dir)
    assert written == {0.2: dataset_path(out_dir, ADVECTION, TRAIN, 0.2), 0.4: dataset_path(out_dir, ADVECTION, TRAIN, 0.4)}
    assert os.path.basename(written[0.2]) == 'advection_train_0.2.pdeb'
    datasets = [read_dataset(written[p]) for p in (0.2, 0.4)]
    assert [d.params.value for d in datasets] == [0.2, 0.4]

    # regenerating gives byte-identical files
    with open(written[0.2], 'rb') as f:
        before = f.read()
    generate_dataset(ADVECTION, [0.2], 2, small_grid, seed=1, split=TRAIN, out_dir=out_dir)
    with open(written[0.2], 'rb') as f:
        assert f.read() == before

    with pytest.raises(ConfigError):
        generate_dataset(ADVECTION, [0.2], 0, small_grid, seed=1, split=TRAIN, out_dir=out_dir)
    with pytest.raises(ConfigError):
        generate_dataset(ADVECTION, [0.2], 2, small_grid, seed=1, split='holdout', out_dir=out_dir)


def test_worker_count_does_not_change_data():
    grid = Grid1D(n_x=32, n_t=3, dt=0.05)
    serial = generate_group(BURGERS, 0.1, 3, grid, seed=2, split=TRAIN, oversample=2)
    parallel = generate_group(BURGERS, 0.1, 3, grid, seed=2, split=TRAIN, oversample=2, workers=2)
    np.testing.assert_array_equal(serial.u, parallel.u)
    assert serial.metadata['generator']['oversample'] == 2
