# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

"""Experiment configuration, the desk-scale experiments and their outputs."""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import datetime
import difflib
import io
import json
import math
import os
import pathlib
import time
import typing
import warnings

import numpy as np
import packaging.version

import hbolab._tags

from hbolab._compat import tomllib
from hbolab._gauge import gauge_residuals
from hbolab._integrator import IntegratorConfig, evolve, integrate, self_convergence_order
from hbolab._models import (
    ModelCoefficients, ModelKind, PhysicalParams, coefficients_from_physical, compatibility_defect, is_bo_compatible,
    sobolev_norm,
)
from hbolab._snapshot import read_snapshot, snapshot_filename, snapshot_step, write_snapshot
from hbolab._spectral import Grid, RealField, _forward, _inverse, dealias_mask, project
from hbolab._util import ConfigError, OutputError, clicounter, ensure_writable_directory, log, style


if typing.TYPE_CHECKING:  # pragma: no cover
    from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

    from hbolab._compat import Mapping, Path
    from hbolab._integrator import TrajectoryRecord

    T = TypeVar('T')
    R = TypeVar('R')


EXPERIMENTS = (
    'simulate', 'sweep-epsilon', 'scaling-check', 'conservation', 'flowmap-continuity', 'gauge-diagnose', 'coeffs',
)
INITIAL_CONDITIONS = ('gaussian', 'sech2', 'random')
PERTURBATIONS = ('high', 'low')

# Physical parameters with rho^2 = 3 rho1^2, for which the gauge equation
# loses its quadratic term.
COMPATIBLE_PHYSICS = (math.sqrt(3.0), 1.0, 1.0, 1.0)

SWEEP_HIGH_RESOLUTION = 4096
SWEEP_HIGH_RESOLUTION_BELOW = 0.02
SLOPE_BAND = (0.7, 1.3)
CONTINUITY_SPREAD = 3.0
DRIFT_FLOOR = 1e-3
MASS_TOLERANCE = 1e-8
ENERGY_TOLERANCE = 1e-6
SCALING_TOLERANCE = 1e-6
MEAN_TOLERANCE = 1e-12

# Carrier frequencies of the flow map perturbations.
_HIGH_CARRIER = 12.0
_LOW_CARRIER = 1.0

MANIFEST = 'manifest.json'


# Configuration


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f'Configuration entry "{name}" must be a finite number')
    return float(value)


def _positive(value: Any, name: str) -> float:
    value = _number(value, name)
    if value <= 0:
        raise ConfigError(f'Configuration entry "{name}" must be positive')
    return value


def _nonnegative(value: Any, name: str) -> float:
    value = _number(value, name)
    if value < 0:
        raise ConfigError(f'Configuration entry "{name}" must be nonnegative')
    return value


def _integer(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'Configuration entry "{name}" must be an integer')
    return value


def _positive_integer(value: Any, name: str) -> int:
    value = _integer(value, name)
    if value < 1:
        raise ConfigError(f'Configuration entry "{name}" must be a positive integer')
    return value


def _bool(value: Any, name: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f'Configuration entry "{name}" must be a boolean')
    return value


def _string(value: Any, name: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f'Configuration entry "{name}" must be a string')
    return value


def _choice(*choices: str) -> Callable[[Any, str], str]:
    def func(value: Any, name: str) -> str:
        if value not in choices:
            alternatives = ', '.join(f'"{choice}"' for choice in choices)
            raise ConfigError(f'Configuration entry "{name}" must be one of {alternatives}')
        return typing.cast(str, value)
    return func


def _nonnegative_numbers(value: Any, name: str) -> Tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f'Configuration entry "{name}" must be a non-empty list of numbers')
    numbers = tuple(_nonnegative(x, name) for x in value)
    if len(set(numbers)) != len(numbers):
        raise ConfigError(f'Configuration entry "{name}" must not contain duplicates')
    return numbers


_SCHEME: Dict[str, Callable[[Any, str], Any]] = {
    'experiment': _choice(*EXPERIMENTS),
    'length': _positive,
    'points': _positive_integer,
    'model': _choice(*(kind.value for kind in ModelKind)),
    'rho': _positive,
    'rho1': _positive,
    'h1': _positive,
    'g': _positive,
    'a': _nonnegative,
    'b': _nonnegative,
    'c': _nonnegative,
    'd': _nonnegative,
    'epsilon': _nonnegative,
    'depth': _positive,
    'a1': _nonnegative,
    'a2': _nonnegative,
    'initial': _choice(*INITIAL_CONDITIONS),
    'amplitude': _number,
    'center': _number,
    'width': _positive,
    'dt': _positive,
    't_end': _positive,
    'snapshot_stride': _positive_integer,
    'dealias': _bool,
    'max_norm': _positive,
    'epsilons': _nonnegative_numbers,
    'scale': _positive,
    'scale_time': _positive,
    'deltas': _nonnegative_numbers,
    'perturbation': _choice(*PERTURBATIONS),
    'trajectory': _string,
    'out': _string,
    'seed': _integer,
    'threads': _positive_integer,
    'override_compat': _bool,
    'timing': _bool,
}


def _validate_config(config: Mapping[str, Any]) -> Dict[str, Any]:
    """Check every entry of a flat configuration table."""
    if not isinstance(config, dict):
        raise ConfigError('Configuration must be a table')
    table = {}
    for key, value in config.items():
        check = _SCHEME.get(key)
        if check is None:
            matches = difflib.get_close_matches(key, _SCHEME.keys(), n=2)
            if matches:
                alternatives = ' or '.join(f'"{match}"' for match in matches)
                raise ConfigError(f'Unknown configuration entry "{key}". Did you mean {alternatives}?')
            raise ConfigError(f'Unknown configuration entry "{key}"')
        table[key] = check(value, key)
    return table


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    Coefficients come either from the physical parameters ``rho``,
    ``rho1``, ``h1`` and ``g`` or directly from ``a``, ``b``, ``c`` and
    ``d``; when neither is given the compatible physics
    ``rho = sqrt(3) rho1`` is used.
    """

    experiment: str = 'simulate'
    length: float = 32 * math.pi
    points: int = 1024
    model: str = 'hbo'
    rho: Optional[float] = None
    rho1: Optional[float] = None
    h1: Optional[float] = None
    g: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    c: Optional[float] = None
    d: Optional[float] = None
    epsilon: float = 0.05
    depth: Optional[float] = None
    a1: float = 0.0
    a2: float = 0.0
    initial: str = 'gaussian'
    amplitude: float = 0.3
    center: Optional[float] = None
    width: float = 2.0
    dt: float = 1e-3
    t_end: float = 1.0
    snapshot_stride: int = 100
    dealias: bool = True
    max_norm: float = 1e6
    epsilons: Tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    scale: float = 2.0
    scale_time: float = 0.512
    deltas: Tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    perturbation: str = 'high'
    trajectory: Optional[str] = None
    out: str = 'hbolab-out'
    seed: int = 0
    threads: int = 1
    override_compat: bool = False
    timing: bool = False

    def __post_init__(self) -> None:
        values = {field.name: getattr(self, field.name) for field in dataclasses.fields(self)}
        for key, value in _validate_config({k: v for k, v in values.items() if v is not None}).items():
            object.__setattr__(self, key, value)
        physical = [self.rho, self.rho1, self.h1, self.g]
        direct = [self.a, self.b, self.c, self.d]
        if any(x is not None for x in physical) and any(x is not None for x in direct):
            raise ConfigError('Give either the physical parameters rho, rho1, h1, g or the coefficients a, b, c, d')
        if any(x is not None for x in physical) and not all(x is not None for x in physical):
            raise ConfigError('The physical parameters rho, rho1, h1 and g must be given together')
        if self.model == 'ilw':
            if self.depth is None or any(x is None for x in (self.b, self.c, self.d)):
                raise ConfigError('The ILW model requires the depth and the coefficients b, c and d')
        elif self.depth is not None:
            raise ConfigError(f'Configuration entry "depth" only applies to the ILW model, not "{self.model}"')

    @classmethod
    def from_mapping(cls, config: Mapping[str, Any]) -> ExperimentConfig:
        return cls(**_validate_config(config))

    def as_dict(self) -> Dict[str, Any]:
        """Flat table of all set entries, accepted back by :meth:`from_mapping`."""
        table = {}
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if value is None:
                continue
            table[field.name] = list(value) if isinstance(value, tuple) else value
        return table

    def replace(self, **changes: Any) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    @property
    def grid(self) -> Grid:
        return Grid(self.length, self.points)

    @property
    def physical(self) -> PhysicalParams:
        if self.rho is None:
            return PhysicalParams(*COMPATIBLE_PHYSICS)
        return PhysicalParams(self.rho, self.rho1, self.h1, self.g)  # type: ignore[arg-type]

    def coefficients(self) -> ModelCoefficients:
        kind = ModelKind(self.model)
        if kind is ModelKind.ILW:
            return ModelCoefficients.ilw(
                self.a1, self.a2, self.b, self.c, self.d, self.epsilon, self.depth)  # type: ignore[arg-type]
        if self.a is not None:
            if any(x is None for x in (self.b, self.c, self.d)):
                raise ConfigError('The coefficients a, b, c and d must be given together')
            coeffs = ModelCoefficients(self.a, self.b, self.c, self.d, self.epsilon)  # type: ignore[arg-type]
        else:
            coeffs = coefficients_from_physical(self.physical, self.epsilon)
        return coeffs.as_bo() if kind is ModelKind.BO else coeffs

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(self.dt, self.t_end, self.snapshot_stride, self.dealias, self.max_norm)


def load_config(path: Path) -> Dict[str, Any]:
    """Read a TOML configuration or the ``config`` member of a run manifest."""
    path = pathlib.Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f'Could not read configuration file {os.fspath(path)!r}: {exc.strerror}') from exc
    if path.suffix == '.json':
        try:
            manifest = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ConfigError(f'Invalid manifest {os.fspath(path)!r}: {exc}') from exc
        if not isinstance(manifest, dict) or not isinstance(manifest.get('config'), dict):
            raise ConfigError(f'Manifest {os.fspath(path)!r} has no "config" table')
        _check_manifest_version(manifest.get('version'))
        return manifest['config']
    try:
        return tomllib.loads(data.decode())
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f'Invalid configuration file {os.fspath(path)!r}: {exc}') from exc


def _check_manifest_version(version: Any) -> None:
    current = hbolab._tags.get_code_version()
    if not isinstance(version, str) or version == current or 'unknown' in (version, current):
        return
    try:
        same = packaging.version.Version(version) == packaging.version.Version(current)
    except packaging.version.InvalidVersion:
        same = False
    if not same:
        warnings.warn(f'Manifest was written by hbolab {version}, replaying with {current}', stacklevel=2)


# Initial data


def initial_condition(cfg: ExperimentConfig, grid: Optional[Grid] = None) -> RealField:
    """Mean-subtracted initial field of the configured family."""
    grid = grid or cfg.grid
    center = grid.length / 2 if cfg.center is None else cfg.center
    # Distance on the circle, so that bumps near the boundary stay smooth.
    x = (grid.x - center + grid.length / 2) % grid.length - grid.length / 2
    if cfg.initial == 'gaussian':
        samples = cfg.amplitude * np.exp(-(x / cfg.width) ** 2)
    elif cfg.initial == 'sech2':
        samples = cfg.amplitude / np.cosh(x / cfg.width) ** 2
    else:
        samples = _random_samples(grid, cfg.amplitude, cfg.width, cfg.seed)
    return RealField(grid, samples - np.mean(samples))


def _random_samples(grid: Grid, amplitude: float, width: float, seed: int) -> Any:
    rng = np.random.default_rng(seed)
    xi = grid.wavenumbers
    coefficients = (rng.standard_normal(grid.points) + 1j * rng.standard_normal(grid.points)) * np.exp(-(xi * width) ** 2 / 4)
    coefficients[0] = 0.0
    coefficients[grid.nyquist_index] = 0.0
    coefficients *= dealias_mask(grid)
    # Hermitian part, so the field is real.
    coefficients = (coefficients + np.conj(coefficients[grid.conjugate_index])) / 2
    samples = _inverse(coefficients).real
    peak = np.max(np.abs(samples))
    return samples if peak == 0 else amplitude * samples / peak


def perturbation(cfg: ExperimentConfig, grid: Optional[Grid] = None) -> RealField:
    """Perturbation direction of unit H1 norm for the flow map experiment."""
    grid = grid or cfg.grid
    center = grid.length / 2 if cfg.center is None else cfg.center
    x = (grid.x - center + grid.length / 2) % grid.length - grid.length / 2
    if cfg.perturbation == 'high':
        carrier, which = _HIGH_CARRIER, 'HI'
    else:
        carrier, which = _LOW_CARRIER, 'LO'
    envelope = np.exp(-(x / cfg.width) ** 2)
    field = project(RealField(grid, envelope * np.cos(carrier * x)), which)
    samples = _inverse(_forward(field.samples) * dealias_mask(grid)).real
    samples = samples - np.mean(samples)
    norm = sobolev_norm(RealField(grid, samples), 1.0)
    if norm == 0:
        raise ConfigError(f'The {cfg.perturbation} frequency perturbation vanishes on this grid')
    return RealField(grid, samples / norm)


# Reports


@dataclasses.dataclass
class Table:
    name: str
    units: str
    header: Sequence[str]
    rows: List[Sequence[Any]] = dataclasses.field(default_factory=list)

    @property
    def filename(self) -> str:
        return f'{self.name}.csv'


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_table(table: Table) -> str:
    data = io.StringIO()
    data.write(f'# units: {table.units}\n')
    writer = csv.writer(data, delimiter=',', quotechar='"', lineterminator='\n')
    writer.writerow(table.header)
    writer.writerows([_format(value) for value in row] for row in table.rows)
    return data.getvalue()


class Report:
    """Outcome of one experiment, independent of how it is written."""

    @property
    def status(self) -> str:
        return 'complete'

    @property
    def reason(self) -> Optional[str]:
        return None

    @property
    def passed(self) -> Optional[bool]:
        return None

    def tables(self) -> List[Table]:
        return []

    def snapshots(self) -> List[Tuple[int, RealField]]:
        return []

    def summary(self) -> List[str]:
        return []


def _trajectory_status(trajectory: TrajectoryRecord) -> str:
    return 'complete' if trajectory.complete else 'partial'


def _observables_table(trajectory: TrajectoryRecord) -> Table:
    table = Table(
        'observables', 't=time, M=int v^2 dx, H=energy, l2/h_half/h1=Sobolev norms',
        ('t', 'M', 'H', 'l2', 'h_half', 'h1'))
    for t, obs in zip(trajectory.times, trajectory.observables):
        table.rows.append((t, obs.mass, obs.energy, obs.l2_norm, obs.h_half_norm, obs.h1_norm))
    return table


@dataclasses.dataclass
class SimulationReport(Report):
    trajectory: TrajectoryRecord

    @property
    def status(self) -> str:
        return _trajectory_status(self.trajectory)

    @property
    def reason(self) -> Optional[str]:
        return self.trajectory.reason

    def tables(self) -> List[Table]:
        return [_observables_table(self.trajectory)]

    def snapshots(self) -> List[Tuple[int, RealField]]:
        return list(zip(self.trajectory.snapshot_steps, self.trajectory.snapshots))

    def summary(self) -> List[str]:
        final = self.trajectory.observables[-1]
        return [f't = {self.trajectory.times[-1]!r}, M = {final.mass!r}, H = {final.energy!r}']


def _drift(value: float, initial: float) -> float:
    return abs(value - initial) / max(abs(initial), DRIFT_FLOOR)


@dataclasses.dataclass
class ConservationReport(Report):
    trajectory: TrajectoryRecord
    mass_tolerance: float = MASS_TOLERANCE
    energy_tolerance: float = ENERGY_TOLERANCE

    @property
    def status(self) -> str:
        return _trajectory_status(self.trajectory)

    @property
    def reason(self) -> Optional[str]:
        return self.trajectory.reason

    @property
    def mass_drift(self) -> List[float]:
        m0 = self.trajectory.observables[0].mass
        return [_drift(obs.mass, m0) for obs in self.trajectory.observables]

    @property
    def energy_drift(self) -> List[float]:
        h0 = self.trajectory.observables[0].energy
        return [_drift(obs.energy, h0) for obs in self.trajectory.observables]

    @property
    def passed(self) -> bool:
        return (
            self.trajectory.complete
            and max(self.mass_drift) < self.mass_tolerance
            and max(self.energy_drift) < self.energy_tolerance
        )

    def tables(self) -> List[Table]:
        table = Table(
            'conservation', 't=time, M=int v^2 dx, H=energy, rel_drift=relative drift',
            ('t', 'M', 'H', 'rel_drift_M', 'rel_drift_H'))
        rows = zip(self.trajectory.times, self.trajectory.observables, self.mass_drift, self.energy_drift)
        for t, obs, dm, dh in rows:
            table.rows.append((t, obs.mass, obs.energy, dm, dh))
        return [table]

    def summary(self) -> List[str]:
        return [
            f'max relative drift of M: {max(self.mass_drift):.3e} (tolerance {self.mass_tolerance:.0e})',
            f'max relative drift of H: {max(self.energy_drift):.3e} (tolerance {self.energy_tolerance:.0e})',
        ]


@dataclasses.dataclass(frozen=True)
class SweepRow:
    epsilon: float
    dist_h1: float
    dist_l2: float
    wall_seconds: float
    status: str = 'complete'
    reason: Optional[str] = None


@dataclasses.dataclass
class SweepResult(Report):
    """Distances to the BO solution, one row per epsilon in decreasing order."""

    rows: List[SweepRow]
    slope: float
    slope_halfwidth: float
    points: int

    @property
    def status(self) -> str:
        return 'complete' if all(row.status == 'complete' for row in self.rows) else 'partial'

    @property
    def reason(self) -> Optional[str]:
        for row in self.rows:
            if row.reason:
                return row.reason
        return None

    @property
    def monotone(self) -> bool:
        distances = [row.dist_h1 for row in self.rows if row.epsilon > 0]
        return all(first > second for first, second in zip(distances, distances[1:]))

    @property
    def passed(self) -> bool:
        lo, hi = SLOPE_BAND
        return self.status == 'complete' and self.monotone and lo <= self.slope <= hi

    def tables(self) -> List[Table]:
        table = Table(
            'sweep', 'epsilon=1, dist=sup over snapshots of the norm of v_eps - v_BO, wall_seconds=s',
            ('epsilon', 'dist_H1', 'dist_L2', 'wall_seconds'))
        for row in self.rows:
            table.rows.append((row.epsilon, row.dist_h1, row.dist_l2, row.wall_seconds))
        return [table]

    def summary(self) -> List[str]:
        return [
            f'fitted slope {self.slope:.4f} +/- {self.slope_halfwidth:.4f} on {self.points} points',
            f'distances {"strictly decreasing" if self.monotone else "NOT monotone"}',
        ]


@dataclasses.dataclass
class ScalingReport(Report):
    scale: float
    time: float
    mismatch: float
    reference_error: float

    @property
    def passed(self) -> bool:
        return self.mismatch < SCALING_TOLERANCE

    def tables(self) -> List[Table]:
        table = Table(
            'scaling', 'scale=1, t=time, mismatch and reference_error relative L2',
            ('scale', 't', 'mismatch_L2', 'reference_error'))
        table.rows.append((self.scale, self.time, self.mismatch, self.reference_error))
        return [table]

    def summary(self) -> List[str]:
        return [f'relative L2 mismatch {self.mismatch:.3e}, step error of the scaled run {self.reference_error:.3e}']


@dataclasses.dataclass
class ContinuityReport(Report):
    perturbation: str
    deltas: List[float]
    differences: List[float]
    ratios: List[float]

    @property
    def spread(self) -> float:
        ratios = [r for delta, r in zip(self.deltas, self.ratios) if delta > 0]
        if not ratios:
            return math.nan
        if min(ratios) == 0:
            return math.inf
        return max(ratios) / min(ratios)

    @property
    def passed(self) -> bool:
        return self.spread <= CONTINUITY_SPREAD

    def tables(self) -> List[Table]:
        table = Table(
            'continuity', 'delta=1, difference_H1=H1 norm, ratio=difference_H1/(delta |phi|_H1)',
            ('delta', 'difference_H1', 'ratio'))
        table.rows.extend(zip(self.deltas, self.differences, self.ratios))
        return [table]

    def summary(self) -> List[str]:
        return [f'difference quotients within a factor {self.spread:.3f} of each other ({self.perturbation} frequencies)']


@dataclasses.dataclass
class GaugeReport(Report):
    times: List[float]
    recovery: List[float]
    localized: List[float]
    consistency: List[float]
    compatible: bool

    def tables(self) -> List[Table]:
        table = Table(
            'gauge',
            't=time, residual_35=global recovery, residual_36=recovery above the HI cutoff, both relative L2 against A v, '
            'compat=3ac/(4d) equals b',
            ('t', 'residual_35', 'residual_36', 'compat'))
        for row in zip(self.times, self.recovery, self.localized):
            table.rows.append((*row, self.compatible))
        consistency = Table(
            'gauge_consistency', 't=time, residual_consistency=relative L2 defect of w against iA P+hi(v e^iF)',
            ('t', 'residual_consistency'))
        consistency.rows.extend(zip(self.times, self.consistency))
        return [table, consistency]

    def summary(self) -> List[str]:
        if not self.times:
            return ['no snapshots']
        return [
            f'max recovery residual {max(self.recovery):.3e}, '
            f'max localized residual {max(self.localized):.3e} over {len(self.times)} snapshots'
        ]


@dataclasses.dataclass
class CoefficientReport(Report):
    params: PhysicalParams
    coeffs: ModelCoefficients

    @property
    def gauge_ratio(self) -> float:
        """``3ac / (4d)``, to be compared with ``b``."""
        return 3 * self.coeffs.a * self.coeffs.c / (4 * self.coeffs.d)

    @property
    def compatible(self) -> bool:
        return is_bo_compatible(self.coeffs)

    def summary(self) -> List[str]:
        c = self.coeffs
        p = self.params
        return [
            f'rho = {p.rho!r}, rho1 = {p.rho1!r}, h1 = {p.h1!r}, g = {p.g!r}',
            f'a = {c.a!r}',
            f'b = {c.b!r}',
            f'c = {c.c!r}',
            f'd = {c.d!r}',
            f'3ac/(4d) = {self.gauge_ratio!r} vs b = {c.b!r}, relative defect {compatibility_defect(c):.3e}',
            f'BO compatible: {"yes" if self.compatible else "no"}',
        ]


# Experiments


def _map(func: Callable[[T], R], items: Sequence[T], threads: int) -> List[R]:
    """Apply ``func`` to every item, in order, on up to ``threads`` workers."""
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))


def _counted(counter: clicounter, description: str, func: Callable[[], R]) -> R:
    result = func()
    counter.update(description)
    return result


def run_simulate(cfg: ExperimentConfig) -> SimulationReport:
    return SimulationReport(integrate(initial_condition(cfg), cfg.coefficients(), cfg.integrator()))


def run_conservation(cfg: ExperimentConfig) -> ConservationReport:
    return ConservationReport(integrate(initial_condition(cfg), cfg.coefficients(), cfg.integrator()))


def _sweep_points(cfg: ExperimentConfig) -> int:
    positive = [eps for eps in cfg.epsilons if eps > 0]
    if positive and min(positive) < SWEEP_HIGH_RESOLUTION_BELOW and cfg.points < SWEEP_HIGH_RESOLUTION:
        warnings.warn(
            f'Smallest epsilon {min(positive)!r} is below {SWEEP_HIGH_RESOLUTION_BELOW}: '
            f'raising the resolution of the whole sweep from {cfg.points} to {SWEEP_HIGH_RESOLUTION} points',
            stacklevel=3)
        return SWEEP_HIGH_RESOLUTION
    return cfg.points


def _distances(member: TrajectoryRecord, baseline: TrajectoryRecord) -> Tuple[float, float]:
    reference = dict(zip(baseline.snapshot_steps, baseline.snapshots))
    h1 = l2 = 0.0
    for step, v in zip(member.snapshot_steps, member.snapshots):
        if step not in reference:
            continue
        diff = v - reference[step]
        h1 = max(h1, sobolev_norm(diff, 1.0))
        l2 = max(l2, sobolev_norm(diff, 0.0))
    return h1, l2


def _fit_slope(rows: Sequence[SweepRow]) -> Tuple[float, float]:
    """Least-squares slope of log(dist_H1) against log(epsilon) and twice its standard error."""
    usable = [row for row in rows if row.epsilon > 0 and row.dist_h1 > 0 and row.status == 'complete']
    if len(usable) < 2:
        return math.nan, math.nan
    x = np.log([row.epsilon for row in usable])
    y = np.log([row.dist_h1 for row in usable])
    slope, intercept = np.polyfit(x, y, 1)
    if len(usable) < 3:
        return float(slope), math.nan
    residuals = y - (slope * x + intercept)
    variance = float(np.sum(residuals ** 2)) / (len(usable) - 2)
    stderr = math.sqrt(variance / float(np.sum((x - np.mean(x)) ** 2)))
    return float(slope), 2.0 * stderr


def run_epsilon_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Distance between HBO and BO solutions from the same data, over the epsilon ladder."""
    coeffs = cfg.coefficients()
    if coeffs.kind is not ModelKind.HBO:
        raise ConfigError(f'The epsilon sweep compares HBO against BO, got model "{cfg.model}"')
    if not is_bo_compatible(coeffs):
        message = f'Coefficients are not BO compatible: 3ac/(4d) differs from b by {compatibility_defect(coeffs):.3e} relative'
        if not cfg.override_compat:
            raise ConfigError(message + ' (use override_compat to run anyway)')
        warnings.warn(message + ', running in override mode', stacklevel=2)

    points = _sweep_points(cfg)
    grid = Grid(cfg.length, points)
    v0 = initial_condition(cfg, grid)
    icfg = cfg.integrator()
    epsilons = sorted(cfg.epsilons, reverse=True)
    members = [0.0] + [eps for eps in epsilons if eps > 0]

    def run(eps: float) -> Tuple[TrajectoryRecord, float]:
        model = coeffs.as_bo() if eps == 0 else coeffs.with_epsilon(eps)
        start = time.perf_counter()
        trajectory = integrate(v0, model, icfg)
        return trajectory, time.perf_counter() - start if cfg.timing else 0.0

    with clicounter(len(members)) as counter:
        results = _map(
            lambda eps: _counted(counter, f'epsilon = {eps!r}' if eps else 'BO baseline', lambda: run(eps)),
            members, cfg.threads)
    baseline, baseline_seconds = results[0]
    runs = dict(zip(members, results))

    rows = []
    for eps in epsilons:
        if eps == 0:
            rows.append(SweepRow(0.0, 0.0, 0.0, baseline_seconds, _trajectory_status(baseline), baseline.reason))
            continue
        trajectory, seconds = runs[eps]
        h1, l2 = _distances(trajectory, baseline)
        partial = not (trajectory.complete and baseline.complete)
        reason = trajectory.reason or baseline.reason
        rows.append(SweepRow(eps, h1, l2, seconds, 'partial' if partial else 'complete', reason))

    slope, halfwidth = _fit_slope(rows)
    result = SweepResult(rows, slope, halfwidth, points)
    if not result.monotone:
        warnings.warn('Sweep distances are not strictly decreasing with epsilon', stacklevel=2)
    return result


def run_scaling_check(cfg: ExperimentConfig) -> ScalingReport:
    """Compare ``lam v(lam x, lam^3 t)`` with the solution of the rescaled equation.

    The rescaled run uses the same number of points on the period
    ``L / lam``, so its samples are exactly ``lam`` times the original
    ones, and the same step ``dt`` up to ``t / lam^3``.
    """
    coeffs = cfg.coefficients()
    lam = cfg.scale
    scaled_coeffs = coeffs.scaled(lam)
    t = cfg.scale_time
    scaled_time = t / lam ** 3
    base = IntegratorConfig(cfg.dt, t, dealias=cfg.dealias, max_norm=cfg.max_norm)
    try:
        scaled = IntegratorConfig(cfg.dt, scaled_time, dealias=cfg.dealias, max_norm=lam * cfg.max_norm)
    except ConfigError as exc:
        raise ConfigError(
            f'Time step dt={cfg.dt!r} does not divide the rescaled final time '
            f'scale_time / scale**3 = {scaled_time!r}: {exc}') from exc

    v0 = initial_condition(cfg)
    scaled_grid = Grid(cfg.length / lam, cfg.points)
    w0 = RealField(scaled_grid, lam * v0.samples)

    with clicounter(2) as counter:
        v = _counted(counter, 'original equation', lambda: evolve(v0, coeffs, base.dt, base.steps, cfg.dealias, base.max_norm))
        w = _counted(
            counter, 'rescaled equation',
            lambda: evolve(w0, scaled_coeffs, scaled.dt, scaled.steps, cfg.dealias, scaled.max_norm))

    expected = lam * v.samples
    norm = float(np.linalg.norm(expected))
    mismatch = float(np.linalg.norm(w.samples - expected)) / norm if norm else float(np.linalg.norm(w.samples))
    estimate = self_convergence_order(w0, scaled_coeffs, scaled_time, cfg.dt, cfg.dealias)
    wnorm = sobolev_norm(w, 0.0)
    reference = estimate.coarse_error / wnorm if wnorm else estimate.coarse_error
    return ScalingReport(lam, t, mismatch, reference)


def run_flowmap_continuity(cfg: ExperimentConfig) -> ContinuityReport:
    """Difference quotients of the solution map along a fixed perturbation direction."""
    coeffs = cfg.coefficients()
    icfg = cfg.integrator()
    v0 = initial_condition(cfg)
    phi = perturbation(cfg)
    deltas = list(cfg.deltas)

    def run(delta: Optional[float]) -> RealField:
        start = v0 if delta is None else RealField(v0.grid, v0.samples + delta * phi.samples)
        return evolve(start, coeffs, icfg.dt, icfg.steps, cfg.dealias, cfg.max_norm)

    items: List[Optional[float]] = [None, *deltas]
    with clicounter(len(items)) as counter:
        finals = _map(
            lambda delta: _counted(counter, 'reference' if delta is None else f'delta = {delta!r}', lambda: run(delta)),
            items, cfg.threads)

    reference = finals[0]
    differences = []
    ratios = []
    for delta, final in zip(deltas, finals[1:]):
        difference = 0.0 if delta == 0 else sobolev_norm(final - reference, 1.0)
        differences.append(difference)
        ratios.append(difference / delta if delta > 0 else math.nan)
    return ContinuityReport(cfg.perturbation, deltas, differences, ratios)


def _load_trajectory(directory: Path) -> Tuple[List[float], List[RealField]]:
    directory = pathlib.Path(directory)
    manifest = directory / MANIFEST
    try:
        dt = ExperimentConfig.from_mapping(load_config(manifest)).dt
    except ConfigError as exc:
        raise ConfigError(f'Could not load the trajectory in {os.fspath(directory)!r}: {exc}') from exc
    steps = ((snapshot_step(path), path) for path in directory.iterdir())
    files = sorted((step, path) for step, path in steps if step is not None)
    return [step * dt for step, _ in files], [read_snapshot(path) for _, path in files]


def run_gauge_diagnose(cfg: ExperimentConfig) -> GaugeReport:
    """Gauge residuals at every snapshot of a computed or stored trajectory."""
    coeffs = cfg.coefficients()
    if cfg.trajectory is not None:
        times, snapshots = _load_trajectory(cfg.trajectory)
    else:
        trajectory = integrate(initial_condition(cfg), coeffs, cfg.integrator())
        times, snapshots = trajectory.snapshot_times, trajectory.snapshots

    report = GaugeReport([], [], [], [], is_bo_compatible(coeffs))
    with clicounter(len(snapshots)) as counter:
        for t, v in zip(times, snapshots):
            if abs(v.mean) > MEAN_TOLERANCE * v.max_abs:
                warnings.warn(f'Snapshot at t = {t!r} has mean {v.mean!r}, subtracting it', stacklevel=2)
                v = RealField(v.grid, v.samples - v.mean)
            residuals = gauge_residuals(v, coeffs)
            report.times.append(t)
            report.recovery.append(residuals.recovery)
            report.localized.append(residuals.localized)
            report.consistency.append(residuals.consistency)
            counter.update(f't = {t!r}')
    return report


def run_coeffs(cfg: ExperimentConfig) -> CoefficientReport:
    params = cfg.physical
    return CoefficientReport(params, coefficients_from_physical(params, cfg.epsilon))


RUNNERS: Dict[str, Callable[[ExperimentConfig], Report]] = {
    'simulate': run_simulate,
    'sweep-epsilon': run_epsilon_sweep,
    'scaling-check': run_scaling_check,
    'conservation': run_conservation,
    'flowmap-continuity': run_flowmap_continuity,
    'gauge-diagnose': run_gauge_diagnose,
    'coeffs': run_coeffs,
}


# Outputs


def _timestamp() -> str:
    timestamp = float(os.environ.get('SOURCE_DATE_EPOCH', time.time()))
    return datetime.datetime.fromtimestamp(timestamp, tz=datetime.timezone.utc).isoformat()


def _manifest_path(out: Path) -> pathlib.Path:
    return pathlib.Path(out) / MANIFEST


def emit_outputs(
    report: Optional[Report],
    cfg: ExperimentConfig,
    out: Optional[Path] = None,
    wall_seconds: float = 0.0,
    started: Optional[str] = None,
) -> List[str]:
    """Write the CSV tables, snapshots and run manifest of a report.

    Returns the names of the written files, the manifest last.
    """
    directory = ensure_writable_directory(cfg.out if out is None else out)
    written = []
    try:
        if report is not None:
            for table in report.tables():
                (directory / table.filename).write_text(render_table(table), encoding='utf-8')
                written.append(table.filename)
            for step, field in report.snapshots():
                name = snapshot_filename(step)
                write_snapshot(directory / name, field)
                written.append(name)
        manifest = {
            'version': hbolab._tags.get_code_version(),
            'config': cfg.as_dict(),
            'tags': hbolab._tags.Tag().as_dict(),
            'started': started or _timestamp(),
            'wall_seconds': wall_seconds if cfg.timing else 0.0,
            'status': 'complete' if report is None else report.status,
            'reason': None if report is None else report.reason,
            'passed': None if report is None else report.passed,
            'outputs': written,
        }
        _manifest_path(directory).write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n', encoding='utf-8')
    except OSError as exc:
        raise OutputError(f'Could not write outputs to {os.fspath(directory)!r}: {exc.strerror}') from exc
    return [*written, MANIFEST]


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> Report:
    """Run the configured experiment and write its outputs."""
    runner = RUNNERS[cfg.experiment]
    if write and cfg.experiment != 'coeffs':
        ensure_writable_directory(cfg.out)
    started = _timestamp()
    start = time.perf_counter()
    log(f'{style.INFO}+ {cfg.experiment}{style.RESET}')
    report = runner(cfg)
    wall_seconds = time.perf_counter() - start
    for line in report.summary():
        log(line)
    if report.reason:
        log(f'{style.WARNING}run stopped early: {report.reason}{style.RESET}')
    if write and cfg.experiment != 'coeffs':
        emit_outputs(report, cfg, wall_seconds=wall_seconds, started=started)
    return report
