# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

import dataclasses
import json
import math

import numpy as np
import pytest

import hbolab
import hbolab._experiments

from hbolab._experiments import MANIFEST, Table, perturbation, render_table


# Small runs that finish in well under a second.
QUICK = {
    'points': 256,
    'dt': 1e-3,
    't_end': 0.01,
    'snapshot_stride': 5,
    'timing': False,
}


def quick(tmp_path=None, **changes):
    table = dict(QUICK)
    if tmp_path is not None:
        table['out'] = str(tmp_path / 'out')
    table.update(changes)
    return hbolab.ExperimentConfig.from_mapping(table)


def test_defaults():
    cfg = hbolab.ExperimentConfig()
    assert cfg.grid == hbolab.Grid(32 * math.pi, 1024)
    assert cfg.integrator().steps == 1000
    coeffs = cfg.coefficients()
    assert coeffs.epsilon == 0.05
    assert hbolab.is_bo_compatible(coeffs)
    assert cfg.timing is False


def test_scaling_defaults_representable():
    cfg = hbolab.ExperimentConfig(experiment='scaling-check')
    assert hbolab.IntegratorConfig(cfg.dt, cfg.scale_time).steps == 512
    assert hbolab.IntegratorConfig(cfg.dt, cfg.scale_time / cfg.scale ** 3).steps == 64


@pytest.mark.parametrize(('table', 'match'), [
    ({'epsilom': 0.1}, 'Unknown configuration entry "epsilom". Did you mean "epsilon"'),
    ({'zzz': 1}, 'Unknown configuration entry "zzz"$'),
    ({'points': 1000.5}, 'Configuration entry "points" must be an integer'),
    ({'points': 0}, 'Configuration entry "points" must be a positive integer'),
    ({'dealias': 'yes'}, 'Configuration entry "dealias" must be a boolean'),
    ({'model': 'kdv'}, 'Configuration entry "model" must be one of "hbo", "bo", "ilw"'),
    ({'dt': -1e-3}, 'Configuration entry "dt" must be positive'),
    ({'amplitude': math.inf}, 'Configuration entry "amplitude" must be a finite number'),
    ({'epsilons': []}, 'non-empty list of numbers'),
    ({'epsilons': [0.1, 0.1]}, 'must not contain duplicates'),
    ({'epsilons': [0.1, -0.1]}, 'Configuration entry "epsilons" must be nonnegative'),
    ({'rho': 2.0, 'a': 1.0}, 'Give either the physical parameters'),
    ({'rho': 2.0}, 'must be given together'),
    ({'model': 'ilw', 'b': 1.0, 'c': 1.0, 'd': 1.0}, 'The ILW model requires the depth'),
    ({'depth': 1.0}, 'only applies to the ILW model, not "hbo"'),
])
def test_invalid_config(table, match):
    with pytest.raises(hbolab.ConfigError, match=match):
        hbolab.ExperimentConfig.from_mapping(table)


def test_config_not_a_table():
    with pytest.raises(hbolab.ConfigError, match='must be a table'):
        hbolab.ExperimentConfig.from_mapping([('points', 8)])


def test_config_round_trip():
    cfg = hbolab.ExperimentConfig.from_mapping({
        'experiment': 'sweep-epsilon',
        'rho': 2.0, 'rho1': 1.0, 'h1': 1.0, 'g': 9.81,
        'epsilons': [0.2, 0.1],
        'seed': 3,
    })
    table = cfg.as_dict()
    assert table['epsilons'] == [0.2, 0.1]
    assert 'a' not in table
    assert json.loads(json.dumps(table)) == table
    assert hbolab.ExperimentConfig.from_mapping(table) == cfg


@pytest.mark.parametrize(('table', 'kind'), [
    ({}, hbolab.ModelKind.HBO),
    ({'model': 'bo'}, hbolab.ModelKind.BO),
    ({'model': 'ilw', 'depth': 2.0, 'a1': 0.5, 'a2': 1.0, 'b': 1.0, 'c': 1.0, 'd': 0.5}, hbolab.ModelKind.ILW),
])
def test_coefficients_kind(table, kind):
    assert hbolab.ExperimentConfig.from_mapping(table).coefficients().kind is kind


def test_direct_coefficients():
    coeffs = hbolab.ExperimentConfig(a=1.0, b=0.75, c=1.0, d=1.0, epsilon=0.1).coefficients()
    assert (coeffs.a, coeffs.b, coeffs.c, coeffs.d, coeffs.epsilon) == (1.0, 0.75, 1.0, 1.0, 0.1)
    with pytest.raises(hbolab.ConfigError, match='must be given together'):
        hbolab.ExperimentConfig(a=1.0).coefficients()


def test_load_toml(tmp_path):
    path = tmp_path / 'run.toml'
    path.write_text('experiment = "conservation"\npoints = 512\nepsilons = [0.1, 0.05]\n')
    assert hbolab.load_config(path) == {'experiment': 'conservation', 'points': 512, 'epsilons': [0.1, 0.05]}


def test_load_invalid_toml(tmp_path):
    path = tmp_path / 'run.toml'
    path.write_text('points = \n')
    with pytest.raises(hbolab.ConfigError, match='Invalid configuration file'):
        hbolab.load_config(path)


def test_load_missing(tmp_path):
    with pytest.raises(hbolab.ConfigError, match='Could not read configuration file'):
        hbolab.load_config(tmp_path / 'missing.toml')


def test_load_manifest_without_config(tmp_path):
    path = tmp_path / MANIFEST
    path.write_text('{"version": "0.1.0"}')
    with pytest.raises(hbolab.ConfigError, match='has no "config" table'):
        hbolab.load_config(path)


def test_load_manifest_version_mismatch(mocker, tmp_path):
    mocker.patch('hbolab._tags.get_code_version', return_value='0.2.0')
    path = tmp_path / MANIFEST
    path.write_text(json.dumps({'version': '0.1.0', 'config': {'points': 64}}))
    with pytest.warns(UserWarning, match='Manifest was written by hbolab 0.1.0, replaying with 0.2.0'):
        assert hbolab.load_config(path) == {'points': 64}


@pytest.mark.parametrize('version', ['0.2.0', '0.2', 'unknown'])
def test_load_manifest_same_version(mocker, tmp_path, version):
    mocker.patch('hbolab._tags.get_code_version', return_value='0.2.0')
    path = tmp_path / MANIFEST
    path.write_text(json.dumps({'version': version, 'config': {'points': 64}}))
    assert hbolab.load_config(path) == {'points': 64}


@pytest.mark.parametrize('initial', hbolab._experiments.INITIAL_CONDITIONS)
def test_initial_condition(initial):
    cfg = quick(initial=initial)
    v = hbolab.initial_condition(cfg)
    assert v.grid == cfg.grid
    assert abs(v.mean) < 1e-15
    assert 0 < v.max_abs <= 2 * cfg.amplitude


def test_initial_condition_center():
    cfg = quick(center=10.0)
    v = hbolab.initial_condition(cfg)
    assert abs(cfg.grid.x[np.argmax(v.samples)] - 10.0) <= cfg.grid.spacing


def test_random_initial_condition():
    first = hbolab.initial_condition(quick(initial='random', seed=1))
    again = hbolab.initial_condition(quick(initial='random', seed=1))
    other = hbolab.initial_condition(quick(initial='random', seed=2))
    assert np.array_equal(first.samples, again.samples)
    assert not np.array_equal(first.samples, other.samples)
    coefficients = hbolab.forward_transform(first).coefficients
    assert np.all(np.abs(coefficients[3 * np.abs(first.grid.modes) > first.grid.points]) < 1e-15)


@pytest.mark.parametrize(('kind', 'band'), [
    ('high', lambda xi: xi <= 8),
    ('low', lambda xi: xi >= 16),
])
def test_perturbation(kind, band):
    cfg = hbolab.ExperimentConfig(perturbation=kind)
    phi = perturbation(cfg)
    assert hbolab.sobolev_norm(phi, 1.0) == pytest.approx(1.0, rel=1e-12)
    coefficients = hbolab.forward_transform(phi).coefficients
    outside = band(np.abs(cfg.grid.wavenumbers))
    assert np.max(np.abs(coefficients[outside])) < 1e-12 * np.max(np.abs(coefficients))


def test_perturbation_unresolved():
    with pytest.raises(hbolab.ConfigError, match='The high frequency perturbation vanishes on this grid'):
        perturbation(quick())


def test_render_table():
    table = Table('demo', 'x=1', ('x', 'ok', 'label'), [(0.1, True, 'a'), (1e-20, False, 'b,c')])
    assert table.filename == 'demo.csv'
    assert render_table(table) == '# units: x=1\nx,ok,label\n0.1,true,a\n1e-20,false,"b,c"\n'


def test_emit_manifest_only(tmp_path, monkeypatch):
    monkeypatch.setenv('SOURCE_DATE_EPOCH', '1668871912')
    cfg = quick(tmp_path)
    assert hbolab.emit_outputs(None, cfg) == [MANIFEST]
    assert sorted(path.name for path in (tmp_path / 'out').iterdir()) == [MANIFEST]
    manifest = json.loads((tmp_path / 'out' / MANIFEST).read_text())
    assert manifest['config'] == cfg.as_dict()
    assert manifest['status'] == 'complete'
    assert manifest['passed'] is None
    assert manifest['outputs'] == []
    assert manifest['started'] == '2022-11-19T15:31:52+00:00'
    assert manifest['wall_seconds'] == 0.0
    assert set(manifest['tags']) == {'interpreter', 'platform', 'numpy'}


def test_emit_default_timing(tmp_path):
    cfg = hbolab.ExperimentConfig(out=str(tmp_path / 'out'))
    hbolab.emit_outputs(None, cfg, wall_seconds=3.2)
    assert json.loads((tmp_path / 'out' / MANIFEST).read_text())['wall_seconds'] == 0.0
    timed = dataclasses.replace(cfg, timing=True)
    hbolab.emit_outputs(None, timed, wall_seconds=3.2)
    assert json.loads((tmp_path / 'out' / MANIFEST).read_text())['wall_seconds'] == 3.2


def test_emit_unwritable(tmp_path):
    blocker = tmp_path / 'out'
    blocker.write_text('')
    with pytest.raises(hbolab.OutputError, match='is not writable'):
        hbolab.emit_outputs(None, quick(tmp_path))


def test_simulate(tmp_path):
    cfg = quick(tmp_path)
    report = hbolab.run_experiment(cfg)
    assert report.status == 'complete'
    out = tmp_path / 'out'
    names = sorted(path.name for path in out.iterdir())
    assert names == [
        MANIFEST, 'observables.csv', 'snapshot-00000000.bin', 'snapshot-00000005.bin', 'snapshot-00000010.bin',
    ]
    lines = (out / 'observables.csv').read_text().splitlines()
    assert lines[0].startswith('# units:')
    assert lines[1] == 't,M,H,l2,h_half,h1'
    assert len(lines) == 2 + 11
    manifest = json.loads((out / MANIFEST).read_text())
    assert manifest['outputs'][-1] == 'snapshot-00000010.bin'
    final = hbolab.read_snapshot(out / 'snapshot-00000010.bin')
    assert np.array_equal(final.samples, report.trajectory.final.samples)


def test_simulate_deterministic(tmp_path, monkeypatch):
    monkeypatch.setenv('SOURCE_DATE_EPOCH', '1668871912')
    cfg = quick(tmp_path, model='ilw', depth=2.0, a1=0.5, a2=1.0, b=1.0, c=1.0, d=0.5)
    outputs = []
    for _ in range(2):
        hbolab.run_experiment(cfg)
        outputs.append({path.name: path.read_bytes() for path in (tmp_path / 'out').iterdir()})
    assert outputs[0] == outputs[1]


def test_simulate_aborted(tmp_path):
    cfg = quick(tmp_path, max_norm=1e-3)
    report = hbolab.run_experiment(cfg)
    assert report.status == 'partial'
    assert report.reason == 'blowup'
    manifest = json.loads((tmp_path / 'out' / MANIFEST).read_text())
    assert manifest['status'] == 'partial'
    assert manifest['reason'] == 'blowup'
    assert manifest['outputs'] == ['observables.csv', 'snapshot-00000000.bin']


def test_conservation(tmp_path):
    report = hbolab.run_experiment(quick(tmp_path, experiment='conservation', t_end=0.1))
    assert report.passed
    assert report.mass_drift[0] == 0.0
    assert max(report.mass_drift) < 1e-8
    lines = (tmp_path / 'out' / 'conservation.csv').read_text().splitlines()
    assert lines[1] == 't,M,H,rel_drift_M,rel_drift_H'
    assert json.loads((tmp_path / 'out' / MANIFEST).read_text())['passed'] is True


def test_sweep(tmp_path):
    cfg = quick(tmp_path, experiment='sweep-epsilon', epsilons=[0.05, 0.0, 0.1], t_end=0.05)
    result = hbolab.run_experiment(cfg)
    assert [row.epsilon for row in result.rows] == [0.1, 0.05, 0.0]
    assert result.rows[-1].dist_h1 == 0.0
    assert result.rows[-1].dist_l2 == 0.0
    assert result.rows[0].dist_h1 > result.rows[1].dist_h1 > 0
    assert all(row.wall_seconds == 0.0 for row in result.rows)
    assert result.monotone
    assert 0.7 <= result.slope <= 1.3
    assert math.isnan(result.slope_halfwidth)
    assert result.passed
    lines = (tmp_path / 'out' / 'sweep.csv').read_text().splitlines()
    assert lines[1] == 'epsilon,dist_H1,dist_L2,wall_seconds'
    assert lines[-1] == '0.0,0.0,0.0,0.0'


def test_sweep_threads():
    cfg = quick(experiment='sweep-epsilon', epsilons=[0.1, 0.05, 0.025], t_end=0.02)
    serial = hbolab.run_epsilon_sweep(cfg)
    parallel = hbolab.run_epsilon_sweep(cfg.replace(threads=3))
    assert serial.rows == parallel.rows
    assert not math.isnan(serial.slope_halfwidth)


def test_sweep_incompatible():
    cfg = quick(experiment='sweep-epsilon', a=1.0, b=1.0, c=1.0, d=1.0, epsilons=[0.1, 0.05], t_end=0.002)
    with pytest.raises(hbolab.ConfigError, match='not BO compatible.*use override_compat'):
        hbolab.run_epsilon_sweep(cfg)
    with pytest.warns(UserWarning, match='running in override mode'):
        result = hbolab.run_epsilon_sweep(cfg.replace(override_compat=True))
    assert len(result.rows) == 2


def test_sweep_requires_hbo():
    with pytest.raises(hbolab.ConfigError, match='compares HBO against BO'):
        hbolab.run_epsilon_sweep(quick(experiment='sweep-epsilon', model='bo'))


def test_sweep_resolution():
    with pytest.warns(UserWarning, match='raising the resolution of the whole sweep from 256 to 4096 points'):
        assert hbolab._experiments._sweep_points(quick(epsilons=[0.1, 0.01])) == 4096
    assert hbolab._experiments._sweep_points(quick(epsilons=[0.1, 0.02, 0.0])) == 256
    assert hbolab._experiments._sweep_points(quick(points=4096, epsilons=[0.01])) == 4096


def test_scaling_identity():
    report = hbolab.run_scaling_check(quick(experiment='scaling-check', scale=1.0, scale_time=0.01))
    assert report.mismatch == 0.0
    assert report.passed


def test_scaling(tmp_path):
    report = hbolab.run_experiment(quick(tmp_path, experiment='scaling-check', scale=2.0, scale_time=0.008))
    assert report.mismatch < 1e-6
    assert report.passed
    assert report.reference_error >= 0
    lines = (tmp_path / 'out' / 'scaling.csv').read_text().splitlines()
    assert lines[1] == 'scale,t,mismatch_L2,reference_error'


def test_scaling_not_representable():
    with pytest.raises(hbolab.ConfigError, match='does not divide the rescaled final time'):
        hbolab.run_scaling_check(quick(experiment='scaling-check', scale=3.0, scale_time=0.5))


def test_scaling_ilw_rejected():
    cfg = quick(experiment='scaling-check', model='ilw', depth=2.0, b=1.0, c=1.0, d=0.5)
    with pytest.raises(hbolab.ConfigError, match='scaling relation'):
        hbolab.run_scaling_check(cfg)


def test_continuity_low(tmp_path):
    cfg = quick(tmp_path, experiment='flowmap-continuity', perturbation='low', deltas=[1e-2, 1e-3, 0.0])
    report = hbolab.run_experiment(cfg)
    assert report.differences[-1] == 0.0
    assert math.isnan(report.ratios[-1])
    assert report.spread <= 3
    assert report.passed
    lines = (tmp_path / 'out' / 'continuity.csv').read_text().splitlines()
    assert lines[1] == 'delta,difference_H1,ratio'
    assert lines[-1] == '0.0,0.0,nan'


def test_continuity_high():
    cfg = hbolab.ExperimentConfig(
        experiment='flowmap-continuity', t_end=0.01, deltas=(1e-2, 1e-3, 1e-4), threads=2, timing=False)
    report = hbolab.run_flowmap_continuity(cfg)
    assert all(ratio > 0 for ratio in report.ratios)
    assert report.passed


def test_gauge_diagnose(tmp_path):
    report = hbolab.run_experiment(quick(tmp_path, experiment='gauge-diagnose', points=1024))
    assert report.times == pytest.approx([0.0, 0.005, 0.01])
    assert report.compatible
    assert max(report.recovery) < 1e-9
    assert max(report.localized) < 1e-6
    lines = (tmp_path / 'out' / 'gauge.csv').read_text().splitlines()
    assert lines[1] == 't,residual_35,residual_36,compat'
    assert lines[2].endswith(',true')
    consistency = (tmp_path / 'out' / 'gauge_consistency.csv').read_text().splitlines()
    assert consistency[1] == 't,residual_consistency'
    assert len(consistency) == 5


def test_gauge_diagnose_stored_trajectory(tmp_path):
    simulation = quick(tmp_path, points=1024)
    hbolab.run_experiment(simulation)
    cfg = quick(tmp_path / 'diagnose', experiment='gauge-diagnose', trajectory=str(tmp_path / 'out'))
    report = hbolab.run_gauge_diagnose(cfg)
    assert report.times == pytest.approx([0.0, 0.005, 0.01])
    computed = hbolab.run_gauge_diagnose(quick(experiment='gauge-diagnose', points=1024))
    assert report.recovery == computed.recovery


def test_gauge_diagnose_missing_trajectory(tmp_path):
    cfg = quick(experiment='gauge-diagnose', trajectory=str(tmp_path))
    with pytest.raises(hbolab.ConfigError, match='Could not load the trajectory'):
        hbolab.run_gauge_diagnose(cfg)


def test_coeffs(tmp_path):
    report = hbolab.run_experiment(hbolab.ExperimentConfig(experiment='coeffs', out=str(tmp_path / 'out')))
    assert report.compatible
    assert report.gauge_ratio == pytest.approx(report.coeffs.b, rel=1e-12)
    assert report.summary()[-1] == 'BO compatible: yes'
    assert not (tmp_path / 'out').exists()


def test_coeffs_incompatible():
    report = hbolab.run_coeffs(hbolab.ExperimentConfig(experiment='coeffs', rho=2.0, rho1=1.0, h1=1.0, g=1.0))
    assert not report.compatible
    assert report.summary()[-1] == 'BO compatible: no'


@pytest.mark.slow
def test_reproduce_conservation():
    report = hbolab.run_conservation(hbolab.ExperimentConfig(experiment='conservation'))
    assert report.passed


@pytest.mark.slow
def test_reproduce_epsilon_sweep():
    cfg = hbolab.ExperimentConfig(experiment='sweep-epsilon', initial='sech2', amplitude=0.5, threads=4)
    with pytest.warns(UserWarning, match='raising the resolution'):
        result = hbolab.run_epsilon_sweep(cfg)
    assert result.points == 4096
    assert result.monotone
    assert 0.7 <= result.slope <= 1.3


@pytest.mark.slow
def test_reproduce_scaling():
    report = hbolab.run_scaling_check(hbolab.ExperimentConfig(experiment='scaling-check', dt=5e-4))
    assert report.mismatch < 1e-6


@pytest.mark.slow
def test_reproduce_continuity():
    report = hbolab.run_flowmap_continuity(hbolab.ExperimentConfig(experiment='flowmap-continuity', threads=4))
    assert report.spread <= 3
