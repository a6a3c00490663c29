# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

"""Periodic grid, discrete Fourier transform and Fourier multipliers.

Spectral coefficients follow the convention

    coeff(m) = (1/N) sum_j v_j exp(-i 2 pi m j / N)  ~  (1/L) int v exp(-i xi_m x) dx

with ``xi_m = 2 pi m / L`` and modes stored in FFT order.  The Nyquist
mode ``m = -N/2`` has no partner on the grid: every odd real symbol
(derivatives, ``sgn``, dispersion relations) vanishes there and the
half-line indicators of ``P+`` and ``P-`` take the value 1/2, so that
``P+ + P- + mean = 1`` and ``H = -i P+ + i P-`` hold exactly.
"""

from __future__ import annotations

import dataclasses
import functools
import math
import typing

import numpy as np

from hbolab._compat import cached_property
from hbolab._util import ConfigError, FieldError


if typing.TYPE_CHECKING:  # pragma: no cover
    from typing import Any, Callable, List, Optional, Union

    from hbolab._compat import ComplexArray, RealArray

    PhysicalField = Union['RealField', 'ComplexField']
    AnyField = Union['RealField', 'ComplexField', 'SpectralField']


PROJECTIONS = (
    'plus', 'minus', 'hi', 'lo', 'HI', 'LO', 'block', 'geq',
    'plus-hi', 'minus-hi', 'plus-HI', 'minus-HI', 'le', 'eps',
)

# P_HI and P_LO split at the dyadic block 2**4.
_HI_SCALE = 8.0


@dataclasses.dataclass(frozen=True)
class Grid:
    """Equispaced periodic grid on ``[0, length)`` with ``points`` samples."""

    length: float
    points: int

    def __post_init__(self) -> None:
        if not isinstance(self.points, (int, np.integer)) or isinstance(self.points, bool):
            raise ConfigError(f'Grid point count must be an integer, got {self.points!r}')
        if self.points < 8 or self.points % 2:
            raise ConfigError(f'Grid point count must be even and at least 8, got {self.points}')
        if not math.isfinite(self.length) or self.length <= 0:
            raise ConfigError(f'Grid period length must be a positive number, got {self.length!r}')
        object.__setattr__(self, 'points', int(self.points))
        object.__setattr__(self, 'length', float(self.length))

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def nyquist_index(self) -> int:
        """Storage index of the unpaired mode ``m = -N/2``."""
        return self.points // 2

    @property
    def nyquist(self) -> float:
        """Largest resolved wavenumber, ``pi N / L``."""
        return math.pi * self.points / self.length

    @cached_property
    def x(self) -> RealArray:
        return _readonly(np.arange(self.points) * self.spacing)

    @cached_property
    def modes(self) -> 'np.ndarray[Any, np.dtype[np.int64]]':
        n = self.points
        return _readonly(np.concatenate((np.arange(0, n // 2), np.arange(-n // 2, 0))).astype(np.int64))

    @cached_property
    def wavenumbers(self) -> RealArray:
        return _readonly(2.0 * math.pi * self.modes / self.length)

    @cached_property
    def conjugate_index(self) -> 'np.ndarray[Any, np.dtype[np.int64]]':
        """Storage index of mode ``-m`` for every stored mode ``m``."""
        return _readonly((-np.arange(self.points)) % self.points)

    def index(self, mode: int) -> int:
        """Storage index of spectral mode ``mode``."""
        if not -self.points // 2 <= mode < self.points // 2:
            raise FieldError(f'Mode {mode} is not resolved on a grid with {self.points} points')
        return mode % self.points


def _readonly(array: Any) -> Any:
    array.setflags(write=False)
    return array


def _check_grid(first: Grid, second: Grid) -> None:
    if first != second:
        raise FieldError(f'Grid mismatch: {first} and {second}')


def _check_samples(grid: Grid, values: Any, dtype: Any, what: str) -> Any:
    array = np.array(values, dtype=dtype, copy=True)
    if array.shape != (grid.points,):
        raise FieldError(f'{what} must have shape ({grid.points},), got {array.shape}')
    bad = np.flatnonzero(~np.isfinite(array))
    if bad.size:
        raise FieldError(f'{what} contain a non-finite value at index {bad[0]}: {array[bad[0]]!r}')
    return _readonly(array)


@dataclasses.dataclass(frozen=True, eq=False)
class RealField:
    """Real samples ``v(x_j)`` on a grid."""

    grid: Grid
    samples: RealArray

    def __post_init__(self) -> None:
        if np.iscomplexobj(self.samples):
            raise FieldError('Real field samples must be real, got a complex array')
        object.__setattr__(self, 'samples', _check_samples(self.grid, self.samples, np.float64, 'Field samples'))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[RealArray], Any]) -> RealField:
        return cls(grid, np.broadcast_to(func(grid.x), (grid.points,)))

    @classmethod
    def zeros(cls, grid: Grid) -> RealField:
        return cls(grid, np.zeros(grid.points))

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def shifted(self, cells: int) -> RealField:
        """Translate by a whole number of grid cells."""
        return RealField(self.grid, np.roll(self.samples, cells))

    def __add__(self, other: RealField) -> RealField:
        _check_grid(self.grid, other.grid)
        return RealField(self.grid, self.samples + other.samples)

    def __sub__(self, other: RealField) -> RealField:
        _check_grid(self.grid, other.grid)
        return RealField(self.grid, self.samples - other.samples)

    def __mul__(self, factor: float) -> RealField:
        return RealField(self.grid, self.samples * float(factor))

    __rmul__ = __mul__

    def __neg__(self) -> RealField:
        return RealField(self.grid, -self.samples)


@dataclasses.dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a grid, produced by non-Hermitian multipliers."""

    grid: Grid
    samples: ComplexArray

    def __post_init__(self) -> None:
        object.__setattr__(self, 'samples', _check_samples(self.grid, self.samples, np.complex128, 'Field samples'))

    @property
    def real(self) -> RealField:
        return RealField(self.grid, self.samples.real)

    def __add__(self, other: Union[ComplexField, RealField]) -> ComplexField:
        _check_grid(self.grid, other.grid)
        return ComplexField(self.grid, self.samples + other.samples)

    def __sub__(self, other: Union[ComplexField, RealField]) -> ComplexField:
        _check_grid(self.grid, other.grid)
        return ComplexField(self.grid, self.samples - other.samples)

    def __mul__(self, factor: complex) -> ComplexField:
        return ComplexField(self.grid, self.samples * complex(factor))

    __rmul__ = __mul__


@dataclasses.dataclass(frozen=True, eq=False)
class SpectralField:
    """Discrete Fourier coefficients, stored in FFT order."""

    grid: Grid
    coefficients: ComplexArray

    def __post_init__(self) -> None:
        object.__setattr__(
            self, 'coefficients', _check_samples(self.grid, self.coefficients, np.complex128, 'Spectral coefficients'))

    def coeff(self, mode: int) -> complex:
        return complex(self.coefficients[self.grid.index(mode)])

    def symmetry_defect(self) -> float:
        """Largest ``|coeff(-m) - conj(coeff(m))|`` over the grid."""
        c = self.coefficients
        return float(np.max(np.abs(c[self.grid.conjugate_index] - np.conj(c))))

    def __add__(self, other: SpectralField) -> SpectralField:
        _check_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _check_grid(self.grid, other.grid)
        return SpectralField(self.grid, self.coefficients - other.coefficients)


@dataclasses.dataclass(frozen=True, eq=False)
class MultiplierSymbol:
    """A Fourier multiplier evaluated once on the grid wavenumbers."""

    grid: Grid
    values: ComplexArray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128, copy=True)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            mode = self.grid.modes[bad[0]]
            raise FieldError(f'Multiplier symbol is not finite at mode {mode}: {values[bad[0]]!r}')
        object.__setattr__(self, 'values', _readonly(values))

    @classmethod
    def from_function(
        cls,
        grid: Grid,
        func: Callable[[RealArray], Any],
        odd: bool = False,
    ) -> MultiplierSymbol:
        """Evaluate ``func`` on the grid wavenumbers.

        Odd symbols are set to zero on the Nyquist mode, which keeps
        them Hermitian on the grid.
        """
        values = np.array(np.broadcast_to(func(grid.wavenumbers), (grid.points,)), dtype=np.complex128)
        if odd:
            values[grid.nyquist_index] = 0.0
        return cls(grid, values)

    @classmethod
    def identity(cls, grid: Grid) -> MultiplierSymbol:
        return _identity(grid)

    @classmethod
    def derivative(cls, grid: Grid, order: int = 1) -> MultiplierSymbol:
        return _derivative(grid, order)

    @classmethod
    def hilbert(cls, grid: Grid) -> MultiplierSymbol:
        return _hilbert(grid)

    @classmethod
    def bessel(cls, grid: Grid, s: float) -> MultiplierSymbol:
        """Bessel potential ``J^s`` with symbol ``(1 + xi^2)^(s/2)``."""
        return _bessel(grid, float(s))

    @classmethod
    def riesz(cls, grid: Grid, s: float) -> MultiplierSymbol:
        """Riesz potential ``D^s`` with symbol ``|xi|^s``, zero on the mean for ``s < 0``."""
        return _riesz(grid, float(s))

    @classmethod
    def projection(
        cls,
        grid: Grid,
        which: str,
        n: Optional[float] = None,
        epsilon: Optional[float] = None,
    ) -> MultiplierSymbol:
        return _projection(grid, which, None if n is None else float(n), None if epsilon is None else float(epsilon))

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        """Whether ``m(-xi) = conj(m(xi))`` on every grid mode, relative to the largest value."""
        defect = np.abs(self.values[self.grid.conjugate_index] - np.conj(self.values))
        return bool(np.all(defect <= rtol * np.max(np.abs(self.values), initial=0.0)))

    def __mul__(self, other: MultiplierSymbol) -> MultiplierSymbol:
        _check_grid(self.grid, other.grid)
        return MultiplierSymbol(self.grid, self.values * other.values)


def _h(t: RealArray) -> RealArray:
    positive = t > 0
    safe = np.where(positive, t, 1.0)
    return np.where(positive, np.exp(-1.0 / safe), 0.0)


def cutoff_eta(xi: Any) -> Any:
    """Even smooth cutoff: 1 on ``[-1, 1]``, 0 outside ``[-2, 2]``."""
    a = np.abs(np.asarray(xi, dtype=np.float64))
    upper = _h(2.0 - a)
    lower = _h(a - 1.0)
    # upper + lower > 0 everywhere: the supports of the two terms overlap.
    value = upper / (upper + lower)
    return value if value.ndim else float(value)


def build_cutoff_eta() -> Callable[[Any], Any]:
    """Return the cutoff ``eta`` from which the dyadic ladder is built."""
    return cutoff_eta


def phi(xi: Any) -> Any:
    """Annulus function ``eta(xi) - eta(2 xi)``, supported in ``1/2 <= |xi| <= 2``."""
    xi = np.asarray(xi, dtype=np.float64)
    return cutoff_eta(xi) - cutoff_eta(2.0 * xi)


def is_dyadic(n: float) -> bool:
    if n == 0:
        return True
    if not math.isfinite(n) or n < 1:
        return False
    mantissa, _ = math.frexp(n)
    return mantissa == 0.5


def _dyadic(n: Optional[float], which: str) -> float:
    if n is None:
        raise ConfigError(f'Projection "{which}" requires a dyadic frequency N')
    if not is_dyadic(n):
        raise ConfigError(f'Projection "{which}" requires N in {{0, 1, 2, 4, ...}}, got {n!r}')
    return n


def phi_block(n: float) -> Callable[[Any], Any]:
    """Symbol of the Littlewood-Paley block ``P_N``."""
    n = _dyadic(n, 'block')
    if n == 0:
        return lambda xi: cutoff_eta(2.0 * np.asarray(xi, dtype=np.float64))
    return lambda xi: phi(np.asarray(xi, dtype=np.float64) / n)


def ladder_top(grid: Grid) -> int:
    """Largest dyadic block ``2**l <= nyquist / 2``, or 0 when no block fits."""
    top = 0
    n = 1
    while n <= grid.nyquist / 2:
        top = n
        n *= 2
    return top


def dyadic_ladder(grid: Grid) -> List[int]:
    top = ladder_top(grid)
    ladder = [0]
    n = 1
    while n <= top:
        ladder.append(n)
        n *= 2
    return ladder


def ladder_coverage(grid: Grid) -> float:
    """Radius up to which the blocks of :func:`dyadic_ladder` sum to one."""
    top = ladder_top(grid)
    return float(top) if top else 0.5


@functools.lru_cache(maxsize=None)
def _identity(grid: Grid) -> MultiplierSymbol:
    return MultiplierSymbol(grid, np.ones(grid.points))


@functools.lru_cache(maxsize=None)
def _derivative(grid: Grid, order: int) -> MultiplierSymbol:
    if order < 0:
        raise ConfigError(f'Derivative order must be nonnegative, got {order}')
    return MultiplierSymbol.from_function(grid, lambda xi: (1j ** order) * xi ** order, odd=bool(order % 2))


@functools.lru_cache(maxsize=None)
def _hilbert(grid: Grid) -> MultiplierSymbol:
    return MultiplierSymbol.from_function(grid, lambda xi: -1j * np.sign(xi), odd=True)


@functools.lru_cache(maxsize=None)
def _bessel(grid: Grid, s: float) -> MultiplierSymbol:
    return MultiplierSymbol.from_function(grid, lambda xi: (1.0 + xi ** 2) ** (s / 2))


@functools.lru_cache(maxsize=None)
def _riesz(grid: Grid, s: float) -> MultiplierSymbol:
    def symbol(xi: RealArray) -> RealArray:
        a = np.abs(xi)
        if s >= 0:
            return a ** s
        return np.where(a > 0, np.where(a > 0, a, 1.0) ** s, 0.0)
    return MultiplierSymbol.from_function(grid, symbol)


def _half_line(grid: Grid, sign: int) -> RealArray:
    values = (np.sign(grid.modes) == sign).astype(np.float64)
    values[grid.nyquist_index] = 0.5
    return values


@functools.lru_cache(maxsize=None)
def _projection(grid: Grid, which: str, n: Optional[float], epsilon: Optional[float]) -> MultiplierSymbol:
    xi = grid.wavenumbers
    if which == 'plus':
        return MultiplierSymbol(grid, _half_line(grid, 1))
    if which == 'minus':
        return MultiplierSymbol(grid, _half_line(grid, -1))
    if which == 'lo':
        return MultiplierSymbol(grid, cutoff_eta(xi))
    if which == 'hi':
        return MultiplierSymbol(grid, 1.0 - cutoff_eta(xi))
    if which == 'LO':
        return MultiplierSymbol(grid, cutoff_eta(xi / _HI_SCALE))
    if which == 'HI':
        return MultiplierSymbol(grid, 1.0 - cutoff_eta(xi / _HI_SCALE))
    if which == 'block':
        return MultiplierSymbol(grid, phi_block(_dyadic(n, which))(xi))
    if which == 'geq':
        n = _dyadic(n, which)
        if n == 0:
            return _identity(grid)
        return MultiplierSymbol(grid, 1.0 - cutoff_eta(2.0 * xi / n))
    if which == 'le':
        if n is None or not n > 0:
            raise ConfigError(f'Projection "le" requires a positive frequency scale, got {n!r}')
        return MultiplierSymbol(grid, cutoff_eta(xi / n))
    if which == 'eps':
        if epsilon is None or not epsilon > 0:
            raise ConfigError(f'Projection "eps" requires a positive epsilon, got {epsilon!r}')
        band = cutoff_eta(2.0 * epsilon * xi) - cutoff_eta(8.0 * epsilon * xi)
        return MultiplierSymbol(grid, 1.0 - band)
    sign, _, band = which.partition('-')
    if sign in ('plus', 'minus') and band in ('hi', 'HI'):
        return _projection(grid, sign, None, None) * _projection(grid, band, None, None)
    raise ConfigError(f'Unknown projection "{which}", expected one of {", ".join(PROJECTIONS)}')


def _forward(samples: Any) -> ComplexArray:
    return np.fft.fft(samples) / samples.shape[-1]


def _inverse(coefficients: ComplexArray) -> ComplexArray:
    return np.fft.ifft(coefficients) * coefficients.shape[-1]


def forward_transform(v: PhysicalField) -> SpectralField:
    """Discrete Fourier coefficients of a physical field."""
    return SpectralField(v.grid, _forward(v.samples))


def _real_part(grid: Grid, samples: ComplexArray) -> RealField:
    norm = np.linalg.norm(samples)
    residue = np.linalg.norm(samples.imag)
    if residue > 1e-10 * norm:
        raise FieldError(
            f'Spectrum is not conjugate symmetric: imaginary part of the reconstruction is '
            f'{residue / norm:.3e} of the field norm')
    return RealField(grid, samples.real)


def inverse_transform(spectrum: SpectralField) -> RealField:
    """Real field with the given conjugate-symmetric coefficients."""
    return _real_part(spectrum.grid, _inverse(spectrum.coefficients))


def inverse_transform_complex(spectrum: SpectralField) -> ComplexField:
    return ComplexField(spectrum.grid, _inverse(spectrum.coefficients))


def apply_multiplier(spectrum: SpectralField, symbol: MultiplierSymbol) -> SpectralField:
    _check_grid(spectrum.grid, symbol.grid)
    return SpectralField(spectrum.grid, spectrum.coefficients * symbol.values)


def _apply(field: AnyField, symbol: MultiplierSymbol) -> AnyField:
    if isinstance(field, SpectralField):
        return apply_multiplier(field, symbol)
    result = apply_multiplier(forward_transform(field), symbol)
    if isinstance(field, RealField) and symbol.is_hermitian():
        return inverse_transform(result)
    return inverse_transform_complex(result)


def multiply(field: AnyField, symbol: MultiplierSymbol) -> AnyField:
    """Apply a multiplier to a physical or spectral field.

    Real fields stay real under Hermitian symbols; any other
    combination yields a complex field.
    """
    return _apply(field, symbol)


def derivative(field: AnyField, order: int = 1) -> AnyField:
    return _apply(field, MultiplierSymbol.derivative(field.grid, order))


def hilbert_transform(v: PhysicalField) -> PhysicalField:
    """Periodic Hilbert transform, the multiplier ``-i sgn(xi)``."""
    return _apply(v, MultiplierSymbol.hilbert(v.grid))  # type: ignore[return-value]


def project(
    v: AnyField,
    which: str,
    n: Optional[float] = None,
    epsilon: Optional[float] = None,
) -> AnyField:
    """Apply one of the frequency projections.

    ``which`` is one of :data:`PROJECTIONS`; ``block`` and ``geq`` take
    a dyadic ``n``, ``le`` a positive scale ``n`` and ``eps`` the
    parameter ``epsilon`` of the band projector.
    """
    return _apply(v, MultiplierSymbol.projection(v.grid, which, n, epsilon))


def dealias_mask(grid: Grid) -> RealArray:
    return _dealias_mask(grid)


@functools.lru_cache(maxsize=None)
def _dealias_mask(grid: Grid) -> RealArray:
    return _readonly((3 * np.abs(grid.modes) <= grid.points).astype(np.float64))
