# SPDX-FileCopyrightText: 2021 Filipe Laíns <lains@riseup.net>
# SPDX-FileCopyrightText: 2021 Quansight, LLC
# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

from __future__ import annotations

import os
import sys
import typing


if sys.version_info >= (3, 9):
    from collections.abc import Mapping
else:
    from typing import Mapping


if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


from functools import cached_property


if typing.TYPE_CHECKING:
    from typing import Union

    import numpy as np
    import numpy.typing as npt

    if sys.version_info >= (3, 10):
        from typing import ParamSpec
    else:
        from typing_extensions import ParamSpec

    if sys.version_info >= (3, 11):
        from typing import Self
    else:
        from typing_extensions import Self

    Path = Union[str, os.PathLike]
    RealArray = npt.NDArray[np.float64]
    ComplexArray = npt.NDArray[np.complex128]


__all__ = [
    'cached_property',
    'tomllib',
    'ComplexArray',
    'Mapping',
    'Path',
    'ParamSpec',
    'RealArray',
    'Self',
]
