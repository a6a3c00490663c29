# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

from __future__ import annotations

import os
import re
import struct
import typing

import numpy as np

from hbolab._spectral import Grid, RealField
from hbolab._util import Error, OutputError


if typing.TYPE_CHECKING:  # pragma: no cover
    from types import TracebackType
    from typing import BinaryIO, Optional, Type

    from hbolab._compat import Path


MAGIC = b'HOBO'
VERSION = 1
HEADER = struct.Struct('<4sIQd')
SNAPSHOT_FILENAME_REGEX = re.compile(r'^snapshot-(?P<step>[0-9]{8})\.bin$')


def snapshot_filename(step: int) -> str:
    return f'snapshot-{step:08d}.bin'


class SnapshotFile:
    """Binary container for a single real field.

    Layout: magic ``HOBO``, format version (u32), point count (u64),
    period length (f64), then the samples as little-endian f64.
    """
    def __new__(cls, filename: Path, mode: str = 'r') -> 'SnapshotFile':
        if mode == 'w':
            return super().__new__(SnapshotFileWriter)
        if mode == 'r':
            return super().__new__(SnapshotFileReader)
        raise ValueError(f'invalid snapshot file mode: {mode!r}')

    def __init__(self, filename: Path, mode: str = 'r') -> None:
        self.filename = os.fspath(filename)
        self._file: BinaryIO = open(filename, mode + 'b')

    def write(self, field: RealField) -> None:
        raise NotImplementedError

    def read(self) -> RealField:
        raise NotImplementedError

    def close(self) -> None:
        self._file.close()

    def __enter__(self) -> SnapshotFile:
        return self

    def __exit__(self, exc_type: Type[BaseException], exc_val: BaseException, exc_tb: TracebackType) -> None:
        self.close()


class SnapshotFileWriter(SnapshotFile):
    def write(self, field: RealField) -> None:
        grid = field.grid
        self._file.write(HEADER.pack(MAGIC, VERSION, grid.points, grid.length))
        self._file.write(field.samples.astype('<f8').tobytes())


class SnapshotFileReader(SnapshotFile):
    def read(self) -> RealField:
        header = self._file.read(HEADER.size)
        if len(header) != HEADER.size:
            raise OutputError(f'Snapshot {self.filename!r} is truncated: missing header')
        magic, version, points, length = HEADER.unpack(header)
        if magic != MAGIC:
            raise OutputError(f'Snapshot {self.filename!r} has invalid magic bytes {magic!r}')
        if version != VERSION:
            raise OutputError(f'Snapshot {self.filename!r} uses unsupported format version {version}')
        data = self._file.read()
        if len(data) != 8 * points:
            raise OutputError(
                f'Snapshot {self.filename!r} declares {points} samples but holds {len(data)} bytes of data')
        try:
            return RealField(Grid(length, points), np.frombuffer(data, dtype='<f8'))
        except Error as exc:
            raise OutputError(f'Snapshot {self.filename!r} is invalid: {exc}') from exc


def write_snapshot(path: Path, field: RealField) -> None:
    with SnapshotFile(path, 'w') as f:
        f.write(field)


def read_snapshot(path: Path) -> RealField:
    with SnapshotFile(path, 'r') as f:
        return f.read()


def snapshot_step(path: Path) -> Optional[int]:
    """Step index encoded in a snapshot file name."""
    match = SNAPSHOT_FILENAME_REGEX.match(os.path.basename(path))
    return int(match.group('step')) if match else None
