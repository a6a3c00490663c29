# SPDX-FileCopyrightText: 2021 The meson-python developers
# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

import math

import numpy as np
import pytest

import hbolab

from hbolab._spectral import _inverse


# Physical parameters satisfying rho^2 = 3 rho1^2.
COMPATIBLE_PHYSICS = hbolab.PhysicalParams(math.sqrt(3.0), 1.0, 1.0, 1.0)

MODELS = {
    'hbo': lambda: hbolab.coefficients_from_physical(COMPATIBLE_PHYSICS, 0.05),
    'bo': lambda: hbolab.coefficients_from_physical(COMPATIBLE_PHYSICS).as_bo(),
    'ilw': lambda: hbolab.ModelCoefficients.ilw(a1=0.5, a2=1.0, b=1.0, c=1.0, d=0.5, epsilon=0.05, depth=2.0),
}


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run desk-scale reproductions')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip)


def random_field(grid, seed=0, band=None, mean=0.0):
    """Random real field without Nyquist content, band-limited to ``|m| <= band``."""
    rng = np.random.default_rng(seed)
    band = grid.points // 2 - 1 if band is None else band
    coefficients = rng.standard_normal(grid.points) + 1j * rng.standard_normal(grid.points)
    coefficients[np.abs(grid.modes) > band] = 0.0
    coefficients[grid.nyquist_index] = 0.0
    coefficients = (coefficients + np.conj(coefficients[grid.conjugate_index])) / 2
    coefficients[0] = mean
    return hbolab.RealField(grid, _inverse(coefficients).real)


def bump(grid, amplitude=0.3, width=2.0, kind='gaussian'):
    x = grid.x - grid.length / 2
    if kind == 'gaussian':
        samples = amplitude * np.exp(-(x / width) ** 2)
    else:
        samples = amplitude / np.cosh(x / width) ** 2
    return hbolab.RealField(grid, samples - np.mean(samples))


@pytest.fixture()
def unit_grid():
    return hbolab.Grid(2 * math.pi, 64)


@pytest.fixture()
def grid():
    return hbolab.Grid(32 * math.pi, 256)


@pytest.fixture()
def compatible():
    return MODELS['hbo']()


def generate_model_fixture(name):
    @pytest.fixture()
    def fixture():
        return MODELS[name]()
    return fixture


# inject coeffs_* fixtures (https://github.com/pytest-dev/pytest/issues/2424)
for name in MODELS:
    globals()[f'coeffs_{name}'] = generate_model_fixture(name)


@pytest.fixture(autouse=True)
def no_colors(monkeypatch):
    monkeypatch.setenv('NO_COLOR', '1')
    hbolab._util.use_ansi_escapes.cache_clear()
    yield
    hbolab._util.use_ansi_escapes.cache_clear()
