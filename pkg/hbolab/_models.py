# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

"""Evolution models, physical coefficients and conserved quantities.

All three models are written as ``v_t = L v + N(v)`` with ``L`` the
Fourier multiplier ``i omega(xi)`` and ``N`` the quadratic part:

* HBO: ``omega = b |xi| xi - a eps xi^3`` and
  ``N(v) = (c/2) (v^2)_x - d eps (v H v_x + H(v v_x))_x``;
* BO: the HBO model with ``eps = 0``;
* ILW: ``H`` replaced by ``T_h = -i coth(h xi)`` and the third order
  dispersion by ``-(a1 T_h^2 + a2) eps d_x^3``.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import math
import typing

import numpy as np

from hbolab._spectral import (
    Grid, MultiplierSymbol, RealField, SpectralField, _forward, _inverse, dealias_mask, inverse_transform,
)
from hbolab._util import ConfigError, SolverError


if typing.TYPE_CHECKING:  # pragma: no cover
    from typing import Any, Dict, Iterable, Optional

    from hbolab._compat import ComplexArray, RealArray, Self


SOBOLEV_RANGE = (-2.0, 4.0)


class ModelKind(enum.Enum):
    HBO = 'hbo'
    BO = 'bo'
    ILW = 'ilw'


def _check_number(name: str, value: Any, positive: bool = False) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f'Parameter "{name}" must be a number, got {value!r}') from None
    if not math.isfinite(value):
        raise ConfigError(f'Parameter "{name}" must be finite, got {value!r}')
    if positive and value <= 0:
        raise ConfigError(f'Parameter "{name}" must be positive, got {value!r}')
    if value < 0:
        raise ConfigError(f'Parameter "{name}" must be nonnegative, got {value!r}')
    return value


@dataclasses.dataclass(frozen=True)
class PhysicalParams:
    """Two-layer fluid at rest: densities, upper layer depth and gravity."""

    rho: float
    rho1: float
    h1: float
    g: float

    def __post_init__(self) -> None:
        for field in dataclasses.fields(self):
            object.__setattr__(self, field.name, _check_number(field.name, getattr(self, field.name), positive=True))
        if self.rho <= self.rho1:
            raise ConfigError(
                f'Unstable configuration: the lower fluid density rho={self.rho!r} must exceed '
                f'the upper fluid density rho1={self.rho1!r}')


@dataclasses.dataclass(frozen=True)
class ModelCoefficients:
    """Dispersion and nonlinearity coefficients of one evolution model.

    ``depth``, ``a1`` and ``a2`` are only used by the ILW model, which
    ignores ``a``.
    """

    a: float
    b: float
    c: float
    d: float
    epsilon: float = 0.0
    kind: ModelKind = ModelKind.HBO
    depth: Optional[float] = None
    a1: float = 0.0
    a2: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'kind', ModelKind(self.kind))
        for name in ('a', 'b', 'c', 'd', 'epsilon', 'a1', 'a2'):
            object.__setattr__(self, name, _check_number(name, getattr(self, name)))
        if self.kind is ModelKind.ILW:
            object.__setattr__(self, 'depth', _check_number('depth', self.depth, positive=True))
        elif self.depth is not None:
            raise ConfigError(f'Parameter "depth" only applies to the ILW model, not {self.kind.name}')

    @classmethod
    def bo(cls, b: float, c: float, a: float = 0.0, d: float = 0.0) -> Self:
        return cls(a, b, c, d, 0.0, ModelKind.BO)

    @classmethod
    def ilw(cls, a1: float, a2: float, b: float, c: float, d: float, epsilon: float, depth: float) -> Self:
        return cls(0.0, b, c, d, epsilon, ModelKind.ILW, depth, a1, a2)

    @property
    def effective_epsilon(self) -> float:
        """The small parameter as seen by the equation; always 0 for BO."""
        return 0.0 if self.kind is ModelKind.BO else self.epsilon

    @property
    def gauge_constant(self) -> float:
        """``A = 2d / 3a``."""
        if not self.a > 0:
            raise ConfigError(f'The gauge constant requires a > 0, got a={self.a!r}')
        return 2.0 * self.d / (3.0 * self.a)

    def with_epsilon(self, epsilon: float) -> ModelCoefficients:
        return dataclasses.replace(self, epsilon=epsilon)

    def as_bo(self) -> ModelCoefficients:
        return dataclasses.replace(self, epsilon=0.0, kind=ModelKind.BO, depth=None)

    def scaled(self, lam: float) -> ModelCoefficients:
        """Coefficients solved by ``lam v(lam x, lam^3 t)``, with ``eps`` absorbed into ``a`` and ``d``."""
        if self.kind is ModelKind.ILW:
            raise ConfigError('The scaling relation is only defined for the HBO and BO models')
        lam = _check_number('scale', lam, positive=True)
        eps = self.effective_epsilon
        return ModelCoefficients(self.a * eps, self.b * lam, self.c * lam, self.d * eps, 1.0, ModelKind.HBO)


def coefficients_from_physical(
    p: PhysicalParams,
    epsilon: float = 0.0,
    kind: ModelKind = ModelKind.HBO,
) -> ModelCoefficients:
    """Coefficients of the internal wave model for a two-layer fluid."""
    if kind is ModelKind.ILW:
        raise ConfigError('ILW coefficients a1, a2 and the depth are free inputs, not derived from physics')
    rho, rho1, h1, g = p.rho, p.rho1, p.h1, p.g
    radicand = g * rho1 * (rho - rho1) / h1
    a = h1 ** 2 / 2 * (rho ** 2 / rho1 ** 2 - 1 / 3) * math.sqrt(g * h1 * (rho - rho1) / rho1)
    b = rho * h1 ** 2 / (2 * rho1 ** 2) * math.sqrt(radicand)
    c = 3 * math.sqrt(2) / (4 * rho1) * radicand ** 0.25
    d = math.sqrt(2) * rho * h1 / (2 * rho1 ** 2) * radicand ** 0.25
    return ModelCoefficients(a, b, c, d, epsilon, kind)


def compatibility_defect(coeffs: ModelCoefficients) -> float:
    """Relative mismatch ``|3ac/(4d) - b| / |b|``."""
    if not (coeffs.a > 0 and coeffs.b > 0 and coeffs.d > 0):
        raise ConfigError(
            f'Compatibility requires positive a, b and d, got a={coeffs.a!r}, b={coeffs.b!r}, d={coeffs.d!r}')
    return abs(3 * coeffs.a * coeffs.c / (4 * coeffs.d) - coeffs.b) / abs(coeffs.b)


def is_bo_compatible(coeffs: ModelCoefficients, tol: float = 1e-9) -> bool:
    """Whether the quadratic term of the gauge equation cancels, ``3ac/(4d) = b``."""
    return compatibility_defect(coeffs) <= tol


def _x_coth(xi: Any, depth: float) -> Any:
    """``xi coth(h xi)`` with its limit ``1/h`` at the origin."""
    xi = np.asarray(xi, dtype=np.float64)
    nonzero = xi != 0
    safe = np.where(nonzero, xi, 1.0)
    return np.where(nonzero, safe / np.tanh(depth * safe), 1.0 / depth)


def dispersion_relation(xi: Any, coeffs: ModelCoefficients) -> Any:
    """Frequency ``omega(xi)`` of the linear propagator ``exp(i t omega(xi))``."""
    xi = np.asarray(xi, dtype=np.float64)
    eps = coeffs.effective_epsilon
    if coeffs.kind is ModelKind.ILW:
        assert coeffs.depth is not None
        xc = _x_coth(xi, coeffs.depth)
        omega = coeffs.b * xi * xc
        if eps != 0:
            omega = omega + eps * (coeffs.a2 * xi ** 3 - coeffs.a1 * xi * xc ** 2)
    else:
        omega = coeffs.b * np.abs(xi) * xi
        if eps != 0:
            omega = omega - coeffs.a * eps * xi ** 3
    return omega if omega.ndim else float(omega)


def inflection_point(coeffs: ModelCoefficients) -> float:
    """Positive inflection point ``b / (3 a eps)`` of the dispersion relation."""
    if coeffs.kind is ModelKind.ILW:
        raise ConfigError('The inflection point is only defined for the HBO and BO models')
    eps = coeffs.effective_epsilon
    if eps == 0 or coeffs.a == 0:
        return math.inf
    return coeffs.b / (3 * coeffs.a * eps)


def _check_region(xi1: Any, xi2: Any) -> None:
    xi1 = np.asarray(xi1, dtype=np.float64)
    xi2 = np.asarray(xi2, dtype=np.float64)
    if not (np.all(xi1 >= 0) and np.all(xi2 <= 0) and np.all(xi1 + xi2 >= 0)):
        raise ConfigError('Resonance frequencies must satisfy xi1 >= 0, xi2 <= 0 and xi1 + xi2 >= 0')


def resonance_function(xi1: Any, xi2: Any, coeffs: ModelCoefficients) -> Any:
    """Factored resonance ``xi xi2 (3 a eps xi1 - 2 b)`` on the region ``xi1 >= 0 >= xi2``."""
    _check_region(xi1, xi2)
    xi1 = np.asarray(xi1, dtype=np.float64)
    xi2 = np.asarray(xi2, dtype=np.float64)
    eps = coeffs.effective_epsilon
    value = (xi1 + xi2) * xi2 * (3 * coeffs.a * eps * xi1 - 2 * coeffs.b)
    return value if value.ndim else float(value)


def resonance_direct(xi1: Any, xi2: Any, tau1: Any, tau2: Any, coeffs: ModelCoefficients) -> Any:
    """``sigma - sigma1 - sigma2`` with ``sigma = tau - omega(xi)`` and ``tau = tau1 + tau2``."""
    _check_region(xi1, xi2)
    xi1 = np.asarray(xi1, dtype=np.float64)
    xi2 = np.asarray(xi2, dtype=np.float64)
    tau1 = np.asarray(tau1, dtype=np.float64)
    tau2 = np.asarray(tau2, dtype=np.float64)
    sigma = tau1 + tau2 - dispersion_relation(xi1 + xi2, coeffs)
    sigma1 = tau1 - dispersion_relation(xi1, coeffs)
    sigma2 = tau2 - dispersion_relation(xi2, coeffs)
    value = np.asarray(sigma - sigma1 - sigma2)
    return value if value.ndim else float(value)


@functools.lru_cache(maxsize=None)
def linear_symbol(grid: Grid, coeffs: ModelCoefficients) -> MultiplierSymbol:
    """The multiplier ``i omega(xi)`` of the linear part."""
    return MultiplierSymbol.from_function(grid, lambda xi: 1j * dispersion_relation(xi, coeffs), odd=True)


@functools.lru_cache(maxsize=None)
def _nonlocal_symbol(grid: Grid, coeffs: ModelCoefficients) -> MultiplierSymbol:
    """``H`` for HBO and BO, ``-i coth(h xi)`` (zero on the mean) for ILW."""
    if coeffs.kind is not ModelKind.ILW:
        return MultiplierSymbol.hilbert(grid)
    depth = coeffs.depth

    def symbol(xi: RealArray) -> ComplexArray:
        nonzero = xi != 0
        safe = np.where(nonzero, xi, 1.0)
        return np.where(nonzero, -1j / np.tanh(depth * safe), 0.0)

    return MultiplierSymbol.from_function(grid, symbol, odd=True)


def _check_stage(values: ComplexArray, stage: str) -> ComplexArray:
    if not np.all(np.isfinite(values)):
        raise SolverError(f'Non-finite spectrum in stage "{stage}"')
    return values


def _nonlinear_hat(grid: Grid, coeffs: ModelCoefficients, vhat: ComplexArray, dealias: bool = True) -> ComplexArray:
    """Spectrum of the quadratic part ``N(v)``.

    Products are formed in physical space; with ``dealias`` both the
    factors and the products are truncated by the 2/3 rule.
    """
    mask = dealias_mask(grid) if dealias else 1.0
    dx = MultiplierSymbol.derivative(grid).values
    vh = vhat * mask
    v = _inverse(vh).real
    out = np.zeros(grid.points, dtype=np.complex128)
    if coeffs.c != 0:
        square = _check_stage(_forward(v * v) * mask, 'quadratic')
        out += (coeffs.c / 2) * dx * square
    dcoef = coeffs.d * coeffs.effective_epsilon
    if dcoef != 0:
        t = _nonlocal_symbol(grid, coeffs).values
        vx_hat = dx * vh
        vx = _inverse(vx_hat).real
        tvx = _inverse(t * vx_hat).real
        first = _forward(v * tvx) * mask
        second = _forward(v * vx) * mask
        out -= dcoef * dx * _check_stage(first + t * second, 'nonlocal')
    return _check_stage(out, 'nonlinear')


def nonlinear_rhs(v: RealField, coeffs: ModelCoefficients, dealias: bool = True) -> RealField:
    """The quadratic part of the tendency."""
    return _to_field(v.grid, _nonlinear_hat(v.grid, coeffs, _forward(v.samples), dealias))


def _to_field(grid: Grid, values: ComplexArray) -> RealField:
    return inverse_transform(SpectralField(grid, values))


def rhs(v: RealField, coeffs: ModelCoefficients, dealias: bool = True) -> RealField:
    """Full tendency ``v_t`` of the selected model."""
    vhat = _forward(v.samples)
    linear = _check_stage(linear_symbol(v.grid, coeffs).values * vhat, 'linear')
    return _to_field(v.grid, linear + _nonlinear_hat(v.grid, coeffs, vhat, dealias))


def mass(v: RealField) -> float:
    """``M = int v^2 dx`` by the rectangle rule."""
    return float(np.dot(v.samples, v.samples) * v.grid.spacing)


def _quadrature(f: RealArray, g: RealArray, spacing: float) -> float:
    return float(np.dot(f, g) * spacing)


def energy(v: RealField, coeffs: ModelCoefficients, dealias: bool = True) -> float:
    """Hamiltonian of the selected model.

    HBO and BO:
    ``H = int a eps v_x^2 - b v H v_x - (c/3) v^3 + d eps v^2 H v_x``;
    ILW replaces ``H`` by ``T_h`` and ``a eps v_x^2`` by
    ``eps (a1 (T_h v_x)^2 - a2 v_x^2)``.
    """
    grid = v.grid
    dx = grid.spacing
    vhat = _forward(v.samples)
    mask = dealias_mask(grid) if dealias else 1.0
    t = _nonlocal_symbol(grid, coeffs).values
    vx_hat = MultiplierSymbol.derivative(grid).values * vhat
    vx = _inverse(vx_hat).real
    tvx = _inverse(t * vx_hat).real
    square = _inverse(_forward(v.samples * v.samples) * mask).real
    eps = coeffs.effective_epsilon

    value = -coeffs.b * _quadrature(v.samples, tvx, dx)
    value -= coeffs.c / 3 * _quadrature(v.samples, square, dx)
    if eps != 0:
        if coeffs.kind is ModelKind.ILW:
            value += eps * (coeffs.a1 * _quadrature(tvx, tvx, dx) - coeffs.a2 * _quadrature(vx, vx, dx))
        else:
            value += coeffs.a * eps * _quadrature(vx, vx, dx)
        value += coeffs.d * eps * _quadrature(square, tvx, dx)
    return value


def sobolev_norm(v: RealField, s: float) -> float:
    """``(L sum_m (1 + xi_m^2)^s |v_m|^2)^(1/2)``."""
    lo, hi = SOBOLEV_RANGE
    if not lo <= s <= hi:
        raise ConfigError(f'Sobolev order must lie in [{lo}, {hi}], got {s!r}')
    vhat = _forward(v.samples)
    weight = (1.0 + v.grid.wavenumbers ** 2) ** s
    return math.sqrt(v.grid.length * float(np.sum(weight * np.abs(vhat) ** 2)))


@dataclasses.dataclass(frozen=True)
class ObservableSet:
    mass: float
    energy: float
    l2_norm: float
    h_half_norm: float
    h1_norm: float
    hs_norms: Dict[float, float] = dataclasses.field(default_factory=dict)

    def hs_norm(self, s: float) -> float:
        if s == 0:
            return self.l2_norm
        if s == 0.5:
            return self.h_half_norm
        if s == 1:
            return self.h1_norm
        try:
            return self.hs_norms[s]
        except KeyError:
            raise ConfigError(f'Sobolev norm of order {s!r} was not recorded') from None


def observables(
    v: RealField,
    coeffs: ModelCoefficients,
    orders: Iterable[float] = (),
    dealias: bool = True,
) -> ObservableSet:
    return ObservableSet(
        mass=mass(v),
        energy=energy(v, coeffs, dealias),
        l2_norm=sobolev_norm(v, 0.0),
        h_half_norm=sobolev_norm(v, 0.5),
        h1_norm=sobolev_norm(v, 1.0),
        hs_norms={float(s): sobolev_norm(v, s) for s in orders},
    )
