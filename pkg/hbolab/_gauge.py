# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

"""Gauge transformation diagnostics.

With ``F`` the mean-zero antiderivative of ``A v``, ``A = 2d/(3a)``, the
gauge variables are ``W = P+hi(exp(iF))`` and ``w = W_x``.  Nothing here
evolves ``W``; the functions evaluate the algebraic recovery identities
that express ``v`` in terms of ``w`` and report how far the discrete
fields are from satisfying them.
"""

from __future__ import annotations

import dataclasses
import typing

import numpy as np

from hbolab._models import is_bo_compatible
from hbolab._spectral import ComplexField, MultiplierSymbol, RealField, _forward, _inverse, derivative, project
from hbolab._util import FieldError


if typing.TYPE_CHECKING:  # pragma: no cover
    from hbolab._compat import ComplexArray
    from hbolab._models import ModelCoefficients


MEAN_TOLERANCE = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class GaugeState:
    """Gauge variables of one field.

    ``shift`` is the constant added to the mean-zero antiderivative;
    every residual below is invariant under it.
    """

    v: RealField
    A: float
    F: RealField
    phase: ComplexField
    W: ComplexField
    w: ComplexField
    compatible: bool
    shift: float = 0.0


@dataclasses.dataclass(frozen=True)
class GaugeResiduals:
    recovery: float
    localized: float
    consistency: float
    compatible: bool


def _norm(samples: ComplexArray) -> float:
    return float(np.linalg.norm(samples))


def _relative(defect: ComplexArray, reference: ComplexArray) -> float:
    scale = _norm(reference)
    if scale == 0:
        return _norm(defect)
    return _norm(defect) / scale


def antiderivative(v: RealField, A: float) -> RealField:
    """Mean-zero ``F`` with ``F_x = A v``.

    The Nyquist mode of ``v`` has no antiderivative on the grid and is
    dropped.
    """
    mean = v.mean
    if abs(mean) > MEAN_TOLERANCE * v.max_abs:
        raise FieldError(f'Antiderivative requires a mean-zero field, measured mean {mean!r}')
    grid = v.grid
    dx = MultiplierSymbol.derivative(grid).values
    nonzero = dx != 0
    fhat = np.zeros(grid.points, dtype=np.complex128)
    fhat[nonzero] = A * _forward(v.samples)[nonzero] / dx[nonzero]
    return RealField(grid, _inverse(fhat).real)


def gauge_forward(v: RealField, coeffs: ModelCoefficients, phase_shift: float = 0.0) -> GaugeState:
    A = coeffs.gauge_constant
    F = antiderivative(v, A)
    if phase_shift:
        F = RealField(F.grid, F.samples + phase_shift)
    phase = ComplexField(v.grid, np.exp(1j * F.samples))
    W = project(phase, 'plus-hi')
    w = derivative(W)
    return GaugeState(v, A, F, phase, W, w, is_bo_compatible(coeffs), phase_shift)  # type: ignore[arg-type]


def recovery_residual(v: RealField, state: GaugeState) -> float:
    """Relative L2 defect of ``iAv = e^-iF (w + d_x P_lo e^iF + d_x P-hi e^iF)``."""
    unphase = np.conj(state.phase.samples)
    lo = derivative(project(state.phase, 'lo'))
    minus = derivative(project(state.phase, 'minus-hi'))
    rhs = unphase * (state.w.samples + lo.samples + minus.samples)
    lhs = 1j * state.A * v.samples
    return _relative(lhs - rhs, state.A * v.samples)


def localized_recovery_residual(v: RealField, state: GaugeState) -> float:
    """Relative L2 defect of the recovery identity restricted to ``P+HI``.

    The factor ``e^-iF`` of the correction terms is replaced by
    ``P+hi e^-iF`` and ``P+HI e^-iF`` respectively.  The first
    replacement is exact by frequency support; the second leaves the
    part of ``e^-iF`` in the transition band of ``P+HI``, so the
    identity only holds up to the spectral tails of ``e^iF``.  The
    defect is measured against ``A v``, since ``P+HI v`` alone sits at
    roundoff level for well resolved data.
    """
    grid = v.grid
    unphase = ComplexField(grid, np.conj(state.phase.samples))
    lo = derivative(project(state.phase, 'lo'))
    minus = derivative(project(state.phase, 'minus-hi'))

    def outer(samples: ComplexArray) -> ComplexArray:
        return project(ComplexField(grid, samples), 'plus-HI').samples

    rhs = (
        outer(unphase.samples * state.w.samples)
        + outer(project(unphase, 'plus-hi').samples * lo.samples)
        + outer(project(unphase, 'plus-HI').samples * minus.samples)
    )
    target = project(v, 'plus-HI').samples
    return _relative(1j * state.A * target - rhs, state.A * v.samples)


def consistency_residual(v: RealField, state: GaugeState) -> float:
    """Relative defect of ``w = iA P+hi(v e^iF)`` against the spectral derivative of ``W``."""
    expected = project(ComplexField(v.grid, 1j * state.A * v.samples * state.phase.samples), 'plus-hi')
    return _relative(state.w.samples - expected.samples, state.w.samples)


def gauge_residuals(v: RealField, coeffs: ModelCoefficients, phase_shift: float = 0.0) -> GaugeResiduals:
    state = gauge_forward(v, coeffs, phase_shift)
    return GaugeResiduals(
        recovery=recovery_residual(v, state),
        localized=localized_recovery_residual(v, state),
        consistency=consistency_residual(v, state),
        compatible=state.compatible,
    )
