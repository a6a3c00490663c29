# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

"""Integrating-factor Runge-Kutta time stepping.

The state is advanced in spectral space.  With ``E = exp(L dt)`` the
exact linear propagator, one step of the classical fourth order scheme
applied to ``u = exp(-L t) v`` reads::

    k1 = N(v)
    k2 = N(E_h (v + dt/2 k1))
    k3 = N(E_h v + dt/2 k2)
    k4 = N(E v + dt E_h k3)
    v' = E v + dt/6 (E k1 + 2 E_h (k2 + k3) + k4)

where ``E_h = exp(L dt/2)``.  Every stage of ``N`` has a vanishing zero
mode, so the spatial mean is carried through the run bitwise.
"""

from __future__ import annotations

import dataclasses
import math
import typing

import numpy as np

import hbolab._tags

from hbolab._models import ModelCoefficients, ObservableSet, _nonlinear_hat, linear_symbol, observables
from hbolab._spectral import Grid, RealField, SpectralField, _forward, _inverse, _real_part, dealias_mask
from hbolab._util import ConfigError, IntegrationAborted, SolverError


if typing.TYPE_CHECKING:  # pragma: no cover
    from typing import List, Optional

    from hbolab._compat import ComplexArray


DEFAULT_MAX_NORM = 1e6
CFL_NUMBER = 0.5


@dataclasses.dataclass(frozen=True)
class IntegratorConfig:
    """Step size, run length, snapshot stride and guards of one run."""

    dt: float
    t_end: float
    snapshot_stride: int = 1
    dealias: bool = True
    max_norm: float = DEFAULT_MAX_NORM

    def __post_init__(self) -> None:
        for name in ('dt', 't_end', 'max_norm'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value) or value <= 0:
                raise ConfigError(f'Integrator parameter "{name}" must be a positive number, got {value!r}')
        stride = self.snapshot_stride
        if not isinstance(stride, int) or isinstance(stride, bool) or stride < 1:
            raise ConfigError(f'Integrator parameter "snapshot_stride" must be a positive integer, got {stride!r}')
        _ = self.steps

    @property
    def steps(self) -> int:
        """Number of steps, ``t_end / dt``, which must be an integer."""
        steps = round(self.t_end / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ConfigError(f'Final time t_end={self.t_end!r} is not an integer multiple of dt={self.dt!r}')
        return steps


@dataclasses.dataclass
class TrajectoryRecord:
    """Time series produced by one integration run.

    ``times``, ``observables`` and ``means`` hold one entry per step,
    the initial state included.  ``snapshots`` are taken every
    ``snapshot_stride`` steps and at the last completed step; the first
    snapshot is the initial condition itself.
    ``code_version`` is the installed hbolab version that produced it.
    """

    grid: Grid
    coeffs: ModelCoefficients
    config: IntegratorConfig
    times: List[float] = dataclasses.field(default_factory=list)
    observables: List[ObservableSet] = dataclasses.field(default_factory=list)
    means: List[float] = dataclasses.field(default_factory=list)
    snapshot_steps: List[int] = dataclasses.field(default_factory=list)
    snapshots: List[RealField] = dataclasses.field(default_factory=list)
    status: str = 'complete'
    reason: Optional[str] = None
    failed_step: Optional[int] = None
    code_version: str = 'unknown'

    @property
    def snapshot_times(self) -> List[float]:
        return [step * self.config.dt for step in self.snapshot_steps]

    @property
    def final(self) -> RealField:
        return self.snapshots[-1]

    @property
    def complete(self) -> bool:
        return self.status == 'complete'

    def _record(self, step: int, v: RealField, mean: float) -> None:
        self.times.append(step * self.config.dt)
        self.observables.append(observables(v, self.coeffs, dealias=self.config.dealias))
        self.means.append(mean)

    def _snapshot(self, step: int, v: RealField) -> None:
        if self.snapshot_steps and self.snapshot_steps[-1] == step:
            return
        self.snapshot_steps.append(step)
        self.snapshots.append(v)


@dataclasses.dataclass(frozen=True)
class ConvergenceEstimate:
    """Observed order of a dt, dt/2, dt/4 triplet and the error of the finest pair."""

    order: float
    error: float
    coarse_error: float


def _propagator(grid: Grid, coeffs: ModelCoefficients, t: float) -> ComplexArray:
    return np.exp(t * linear_symbol(grid, coeffs).values)


def linear_propagator(spectrum: SpectralField, t: float, coeffs: ModelCoefficients) -> SpectralField:
    """Free evolution ``exp(i t omega(xi))`` applied modewise."""
    return SpectralField(spectrum.grid, spectrum.coefficients * _propagator(spectrum.grid, coeffs, t))


def dealias(spectrum: SpectralField) -> SpectralField:
    """Zero every mode with ``|m| > N/3``."""
    return SpectralField(spectrum.grid, spectrum.coefficients * dealias_mask(spectrum.grid))


def check_cfl(v: RealField, dt: float) -> None:
    """Reject steps violating ``|dt| <= 0.5 dx / max|v|``."""
    peak = v.max_abs
    if peak == 0:
        return
    limit = CFL_NUMBER * v.grid.spacing / peak
    if abs(dt) > limit:
        raise ConfigError(
            f'Time step dt={dt!r} violates the nonlinear CFL condition: '
            f'|dt| must not exceed {limit:.6g} for max|v|={peak:.6g} on spacing {v.grid.spacing:.6g}')


class _Stepper:
    """One-step map with the propagators of a fixed ``dt`` precomputed."""

    def __init__(self, grid: Grid, coeffs: ModelCoefficients, dt: float, dealias: bool = True) -> None:
        self.grid = grid
        self.coeffs = coeffs
        self.dt = dt
        self.dealias = dealias
        self.full = _propagator(grid, coeffs, dt)
        self.half = _propagator(grid, coeffs, dt / 2)

    def _n(self, vhat: ComplexArray) -> ComplexArray:
        return _nonlinear_hat(self.grid, self.coeffs, vhat, self.dealias)

    def __call__(self, vhat: ComplexArray) -> ComplexArray:
        dt, full, half = self.dt, self.full, self.half
        k1 = self._n(vhat)
        k2 = self._n(half * (vhat + dt / 2 * k1))
        k3 = self._n(half * vhat + dt / 2 * k2)
        k4 = self._n(full * vhat + dt * half * k3)
        return full * vhat + dt / 6 * (full * k1 + 2 * half * (k2 + k3) + k4)


def _guard(grid: Grid, vhat: ComplexArray, step: int, max_norm: float, last: RealField) -> RealField:
    if not np.all(np.isfinite(vhat)):
        raise IntegrationAborted(f'Non-finite state at step {step}', 'nan', step, last)
    v = _real_part(grid, _inverse(vhat))
    peak = v.max_abs
    if peak > max_norm:
        raise IntegrationAborted(
            f'Field sup norm {peak:.6g} exceeds the guard {max_norm:.6g} at step {step}', 'blowup', step, last)
    return v


def step_ifrk4(
    v: RealField,
    dt: float,
    coeffs: ModelCoefficients,
    dealias: bool = True,
    max_norm: Optional[float] = None,
) -> RealField:
    """Advance ``v`` by one step of size ``dt``; negative ``dt`` runs backwards."""
    check_cfl(v, dt)
    stepper = _Stepper(v.grid, coeffs, dt, dealias)
    try:
        vhat = stepper(_forward(v.samples))
    except SolverError as exc:
        raise IntegrationAborted(str(exc), 'nan', 1, v) from exc
    return _guard(v.grid, vhat, 1, DEFAULT_MAX_NORM if max_norm is None else max_norm, v)


def evolve(
    v: RealField,
    coeffs: ModelCoefficients,
    dt: float,
    steps: int,
    dealias: bool = True,
    max_norm: float = DEFAULT_MAX_NORM,
) -> RealField:
    """Take ``steps`` steps of size ``dt`` and return only the final state."""
    check_cfl(v, dt)
    stepper = _Stepper(v.grid, coeffs, dt, dealias)
    vhat = _forward(v.samples)
    last = v
    for step in range(1, steps + 1):
        try:
            vhat = stepper(vhat)
        except SolverError as exc:
            raise IntegrationAborted(str(exc), 'nan', step, last) from exc
        last = _guard(v.grid, vhat, step, max_norm, last)
    return last


def integrate(
    v0: RealField,
    coeffs: ModelCoefficients,
    cfg: IntegratorConfig,
    raise_on_abort: bool = False,
) -> TrajectoryRecord:
    """Integrate from ``v0`` to ``cfg.t_end`` and record the trajectory.

    A guard failure stops the run; the record then holds everything up
    to the last valid step with ``status = 'aborted'`` and the reason
    code, unless ``raise_on_abort`` is set.
    """
    check_cfl(v0, cfg.dt)
    grid = v0.grid
    steps = cfg.steps
    stepper = _Stepper(grid, coeffs, cfg.dt, cfg.dealias)
    record = TrajectoryRecord(grid, coeffs, cfg, code_version=hbolab._tags.get_code_version())

    vhat = _forward(v0.samples)
    record._record(0, v0, float(vhat[0].real))
    record._snapshot(0, v0)

    last, last_step = v0, 0
    for step in range(1, steps + 1):
        try:
            try:
                vhat = stepper(vhat)
            except SolverError as exc:
                raise IntegrationAborted(str(exc), 'nan', step, last) from exc
            v = _guard(grid, vhat, step, cfg.max_norm, last)
        except IntegrationAborted as exc:
            if raise_on_abort:
                raise
            record.status = 'aborted'
            record.reason = exc.reason
            record.failed_step = exc.step
            break
        record._record(step, v, float(vhat[0].real))
        if step % cfg.snapshot_stride == 0:
            record._snapshot(step, v)
        last, last_step = v, step

    record._snapshot(last_step, last)
    return record


def _l2_distance(first: RealField, second: RealField) -> float:
    diff = first.samples - second.samples
    return math.sqrt(float(np.dot(diff, diff)) * first.grid.spacing)


def self_convergence_order(
    v0: RealField,
    coeffs: ModelCoefficients,
    t_end: float,
    dt: float,
    dealias: bool = True,
) -> ConvergenceEstimate:
    """Observed order ``log2(|u_dt - u_dt/2| / |u_dt/2 - u_dt/4|)`` at ``t_end``."""
    solutions: List[RealField] = []
    for refine in (1, 2, 4):
        cfg = IntegratorConfig(dt / refine, t_end, dealias=dealias)
        solutions.append(evolve(v0, coeffs, cfg.dt, cfg.steps, dealias))
    coarse = _l2_distance(solutions[0], solutions[1])
    fine = _l2_distance(solutions[1], solutions[2])
    if fine == 0:
        order = math.inf if coarse > 0 else math.nan
    else:
        order = math.log2(coarse / fine)
    return ConvergenceEstimate(order, fine, coarse)

