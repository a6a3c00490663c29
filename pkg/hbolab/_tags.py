# SPDX-FileCopyrightText: 2022 The meson-python developers
# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

"""Provenance tags recorded in every run manifest."""

from __future__ import annotations

import importlib.metadata
import struct
import sys
import sysconfig
import typing

import numpy as np


if typing.TYPE_CHECKING:  # pragma: no cover
    from typing import Dict, Optional


DISTRIBUTION = 'hbo-lab'

INTERPRETERS = {
    'python': 'py',
    'cpython': 'cp',
    'pypy': 'pp',
    'ironpython': 'ip',
    'jython': 'jy',
}


_32_BIT_INTERPRETER = struct.calcsize('P') == 4


def get_interpreter_tag() -> str:
    name = sys.implementation.name
    name = INTERPRETERS.get(name, name)
    version = sys.version_info
    return f'{name}{version[0]}{version[1]}'


def get_platform_tag() -> str:
    platform = sysconfig.get_platform()
    if _32_BIT_INTERPRETER:
        # 32-bit Python running on a 64-bit kernel.
        if platform == 'linux-x86_64':
            return 'linux_i686'
        if platform == 'linux-aarch64':
            return 'linux_armv7l'
    return platform.replace('-', '_').replace('.', '_').lower()


def get_code_version() -> str:
    """Installed version of the distribution, ``'unknown'`` when running from a source tree."""
    try:
        return importlib.metadata.version(DISTRIBUTION)
    except importlib.metadata.PackageNotFoundError:
        return 'unknown'


class Tag:
    def __init__(self, interpreter: Optional[str] = None, platform: Optional[str] = None, numpy: Optional[str] = None):
        self.interpreter = interpreter or get_interpreter_tag()
        self.platform = platform or get_platform_tag()
        self.numpy = numpy or np.__version__

    def __str__(self) -> str:
        return f'{self.interpreter}-{self.platform}-numpy{self.numpy}'

    def as_dict(self) -> Dict[str, str]:
        return {'interpreter': self.interpreter, 'platform': self.platform, 'numpy': self.numpy}
