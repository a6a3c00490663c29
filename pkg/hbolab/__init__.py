# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

"""Pseudo-spectral laboratory for the higher-order Benjamin-Ono equation

Fourier multiplier calculus on the torus, the HBO, BO and ILW evolution
models, an integrating-factor RK4 solver, gauge transformation
diagnostics and the command line harness running the experiments.
"""

from __future__ import annotations

import argparse
import functools
import textwrap
import typing
import warnings

import hbolab._tags

from hbolab._experiments import (
    EXPERIMENTS, ExperimentConfig, Report, SweepResult, emit_outputs, initial_condition, load_config, run_coeffs,
    run_conservation, run_epsilon_sweep, run_experiment, run_flowmap_continuity, run_gauge_diagnose, run_scaling_check,
    run_simulate,
)
from hbolab._gauge import (
    GaugeState, antiderivative, gauge_forward, gauge_residuals, localized_recovery_residual, recovery_residual,
)
from hbolab._integrator import (
    IntegratorConfig, TrajectoryRecord, dealias, integrate, linear_propagator, self_convergence_order, step_ifrk4,
)
from hbolab._models import (
    ModelCoefficients, ModelKind, ObservableSet, PhysicalParams, coefficients_from_physical, dispersion_relation,
    energy, inflection_point, is_bo_compatible, mass, observables, resonance_direct, resonance_function, rhs,
    sobolev_norm,
)
from hbolab._snapshot import SnapshotFile, read_snapshot, write_snapshot
from hbolab._spectral import (
    ComplexField, Grid, MultiplierSymbol, RealField, SpectralField, apply_multiplier, build_cutoff_eta,
    dyadic_ladder, forward_transform, hilbert_transform, inverse_transform, project,
)
from hbolab._util import (
    ConfigError, Error, FieldError, IntegrationAborted, OutputError, SolverError, log, showwarning,
    style,
)


if typing.TYPE_CHECKING:  # pragma: no cover
    from typing import Any, Callable, Dict, Optional, Sequence, TypeVar

    from hbolab._compat import ParamSpec

    P = ParamSpec('P')
    T = TypeVar('T')


__version__ = '0.1.0.dev0'

_DESCRIPTION = 'Pseudo-spectral laboratory for the higher-order Benjamin-Ono equation'


__all__ = [
    'ComplexField',
    'ConfigError',
    'Error',
    'ExperimentConfig',
    'FieldError',
    'GaugeState',
    'Grid',
    'IntegrationAborted',
    'IntegratorConfig',
    'ModelCoefficients',
    'ModelKind',
    'MultiplierSymbol',
    'ObservableSet',
    'OutputError',
    'PhysicalParams',
    'RealField',
    'Report',
    'SnapshotFile',
    'SolverError',
    'SpectralField',
    'SweepResult',
    'TrajectoryRecord',
    'antiderivative',
    'apply_multiplier',
    'build_cutoff_eta',
    'coefficients_from_physical',
    'dealias',
    'dispersion_relation',
    'dyadic_ladder',
    'emit_outputs',
    'energy',
    'forward_transform',
    'gauge_forward',
    'gauge_residuals',
    'hilbert_transform',
    'inflection_point',
    'initial_condition',
    'integrate',
    'inverse_transform',
    'is_bo_compatible',
    'linear_propagator',
    'load_config',
    'localized_recovery_residual',
    'main',
    'mass',
    'observables',
    'project',
    'read_snapshot',
    'recovery_residual',
    'resonance_direct',
    'resonance_function',
    'rhs',
    'run_coeffs',
    'run_conservation',
    'run_epsilon_sweep',
    'run_experiment',
    'run_flowmap_continuity',
    'run_gauge_diagnose',
    'run_scaling_check',
    'run_simulate',
    'self_convergence_order',
    'sobolev_norm',
    'step_ifrk4',
    'write_snapshot',
]


def _cli_hook(func: Callable[P, T]) -> Callable[P, T]:
    @functools.wraps(func)
    def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
        warnings.showwarning = showwarning
        try:
            return func(*args, **kwargs)
        except Error as exc:
            prefix = f'{style.ERROR}hbolab: error:{style.RESET} '
            log('\n' + textwrap.indent(str(exc), prefix))
            raise SystemExit(1) from exc
    return wrapper


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='hbolab', description=_DESCRIPTION, allow_abbrev=False)
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='experiment', required=True, metavar='EXPERIMENT')
    for name in EXPERIMENTS:
        sub = subparsers.add_parser(name, allow_abbrev=False)
        sub.add_argument('--config', metavar='PATH', help='TOML configuration or run manifest')
        if name == 'coeffs':
            for param in ('rho', 'rho1', 'h1', 'g'):
                sub.add_argument(f'--{param}', type=float)
            continue
        sub.add_argument('--out', metavar='DIR', help='output directory')
        sub.add_argument('--threads', type=int, metavar='N', help='worker threads (default 1)')
        sub.add_argument('--override-compat', action='store_true', default=None,
                         help='allow BO incompatible coefficients in the epsilon sweep')
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    table: Dict[str, Any] = {}
    if args.config is not None:
        table.update(load_config(args.config))
    configured = table.get('experiment')
    if configured is not None and configured != args.experiment:
        raise ConfigError(
            f'Configuration file {args.config!r} describes experiment "{configured}", not "{args.experiment}"')
    table['experiment'] = args.experiment
    overrides = {
        key: getattr(args, key, None)
        for key in ('out', 'threads', 'override_compat', 'rho', 'rho1', 'h1', 'g')
    }
    table.update({key: value for key, value in overrides.items() if value is not None})
    if args.experiment == 'coeffs' and any(overrides[key] is not None for key in ('rho', 'rho1', 'h1', 'g')):
        for key in ('a', 'b', 'c', 'd'):
            table.pop(key, None)
    return ExperimentConfig.from_mapping(table)


@_cli_hook
def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    cfg = _config(args)
    log(f'hbolab {__version__} ({hbolab._tags.Tag()})')
    report = run_experiment(cfg)
    passed = report.passed
    if passed is not None:
        outcome = f'{style.INFO}passed{style.RESET}' if passed else f'{style.WARNING}failed{style.RESET}'
        log(f'{cfg.experiment}: {outcome}')
    return 0
