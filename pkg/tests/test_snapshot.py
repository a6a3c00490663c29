# SPDX-FileCopyrightText: 2022 The meson-python developers
# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

import math
import struct

import numpy as np
import pytest

import hbolab
import hbolab._snapshot

from hbolab._snapshot import HEADER, MAGIC, snapshot_filename, snapshot_step

from .conftest import random_field


def test_basic(tmp_path, grid):
    path = tmp_path / snapshot_filename(7)
    v = random_field(grid, 3)
    with hbolab.SnapshotFile(path, 'w') as f:
        assert isinstance(f, hbolab._snapshot.SnapshotFileWriter)
        f.write(v)
    with hbolab.SnapshotFile(path) as f:
        assert isinstance(f, hbolab._snapshot.SnapshotFileReader)
        w = f.read()
    assert w.grid == grid
    assert np.array_equal(w.samples, v.samples)


def test_layout(tmp_path, unit_grid):
    path = tmp_path / 'field.bin'
    hbolab.write_snapshot(path, hbolab.RealField.from_function(unit_grid, np.cos))
    data = path.read_bytes()
    assert len(data) == HEADER.size + 8 * 64
    assert HEADER.unpack(data[:HEADER.size]) == (MAGIC, 1, 64, 2 * math.pi)
    assert struct.unpack('<d', data[HEADER.size:HEADER.size + 8]) == (1.0,)


def test_invalid_mode(tmp_path):
    with pytest.raises(ValueError, match='invalid snapshot file mode'):
        hbolab.SnapshotFile(tmp_path / 'field.bin', 'a')


@pytest.mark.parametrize(('data', 'match'), [
    (b'HOBO', 'truncated'),
    (HEADER.pack(b'WHL!', 1, 8, 1.0) + bytes(64), 'invalid magic bytes'),
    (HEADER.pack(MAGIC, 2, 8, 1.0) + bytes(64), 'unsupported format version 2'),
    (HEADER.pack(MAGIC, 1, 8, 1.0) + bytes(63), 'declares 8 samples but holds 63 bytes'),
    (HEADER.pack(MAGIC, 1, 7, 1.0) + bytes(56), 'is invalid: Grid point count must be even'),
    (HEADER.pack(MAGIC, 1, 8, 1.0) + struct.pack('<8d', *([0.0] * 7 + [math.inf])), 'non-finite value at index 7'),
])
def test_corrupt(tmp_path, data, match):
    path = tmp_path / 'field.bin'
    path.write_bytes(data)
    with pytest.raises(hbolab.OutputError, match=match):
        hbolab.read_snapshot(path)


@pytest.mark.parametrize(('name', 'step'), [
    ('snapshot-00000000.bin', 0),
    ('snapshot-00001000.bin', 1000),
    ('snapshot-1000.bin', None),
    ('observables.csv', None),
])
def test_snapshot_step(tmp_path, name, step):
    assert snapshot_step(tmp_path / name) == step
    if step is not None:
        assert snapshot_filename(step) == name
