# SPDX-FileCopyrightText: 2021 The meson-python developers
# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

import importlib.metadata

import numpy as np
import packaging.tags
import pytest

import hbolab._tags


def test_interpreter_tag():
    expected = f'{packaging.tags.interpreter_name()}{packaging.tags.interpreter_version()}'
    assert hbolab._tags.get_interpreter_tag() == expected


@pytest.mark.parametrize(('platform', 'bits32', 'expected'), [
    ('linux-x86_64', False, 'linux_x86_64'),
    ('linux-x86_64', True, 'linux_i686'),
    ('linux-aarch64', True, 'linux_armv7l'),
    ('macosx-11.0-arm64', False, 'macosx_11_0_arm64'),
    ('win-amd64', False, 'win_amd64'),
])
def test_platform_tag(mocker, platform, bits32, expected):
    mocker.patch('sysconfig.get_platform', return_value=platform)
    mocker.patch('hbolab._tags._32_BIT_INTERPRETER', bits32)
    assert hbolab._tags.get_platform_tag() == expected


def test_tag():
    tag = hbolab._tags.Tag()
    assert tag.numpy == np.__version__
    assert str(tag) == f'{tag.interpreter}-{tag.platform}-numpy{np.__version__}'
    assert str(hbolab._tags.Tag('cp312', 'linux_x86_64', '2.0.0')) == 'cp312-linux_x86_64-numpy2.0.0'
    assert tag.as_dict() == {'interpreter': tag.interpreter, 'platform': tag.platform, 'numpy': tag.numpy}


def test_code_version(mocker):
    mocker.patch('importlib.metadata.version', return_value='0.1.0')
    assert hbolab._tags.get_code_version() == '0.1.0'
    mocker.patch('importlib.metadata.version', side_effect=importlib.metadata.PackageNotFoundError('hbo-lab'))
    assert hbolab._tags.get_code_version() == 'unknown'
