# SPDX-FileCopyrightText: 2024 The hbolab developers
#
# SPDX-License-Identifier: MIT

import json
import textwrap

import pytest

import hbolab


def write_config(path, text):
    path.write_text(textwrap.dedent(text), encoding='utf-8')
    return str(path)


def test_coeffs(capsys):
    assert hbolab.main(['coeffs']) == 0
    out = capsys.readouterr().out
    assert '+ coeffs' in out
    assert out.rstrip().endswith('BO compatible: yes')


def test_coeffs_physical(capsys):
    assert hbolab.main(['coeffs', '--rho', '2.0', '--rho1', '1.0', '--h1', '1.0', '--g', '1.0']) == 0
    assert capsys.readouterr().out.rstrip().endswith('BO compatible: no')


def test_coeffs_incomplete_physical(capsys):
    with pytest.raises(SystemExit) as excinfo:
        hbolab.main(['coeffs', '--rho', '2.0'])
    assert excinfo.value.code == 1
    assert 'hbolab: error: The physical parameters rho, rho1, h1 and g must be given together' in capsys.readouterr().out


def test_simulate(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv('SOURCE_DATE_EPOCH', '1668871912')
    config = write_config(tmp_path / 'run.toml', '''
        experiment = "simulate"
        points = 256
        dt = 1e-3
        t_end = 0.01
        snapshot_stride = 5
        timing = false
    ''')
    out = tmp_path / 'out'
    assert hbolab.main(['simulate', '--config', config, '--out', str(out)]) == 0
    assert '+ simulate' in capsys.readouterr().out
    manifest = json.loads((out / 'manifest.json').read_text())
    assert manifest['status'] == 'complete'
    assert manifest['config']['out'] == str(out)
    assert manifest['started'] == '2022-11-19T15:31:52+00:00'
    assert 'observables.csv' in manifest['outputs']


def test_replay_manifest(tmp_path):
    config = write_config(tmp_path / 'run.toml', '''
        points = 256
        t_end = 0.01
        snapshot_stride = 5
        timing = false
    ''')
    first, second = tmp_path / 'first', tmp_path / 'second'
    hbolab.main(['simulate', '--config', config, '--out', str(first)])
    hbolab.main(['simulate', '--config', str(first / 'manifest.json'), '--out', str(second)])
    assert (first / 'observables.csv').read_text() == (second / 'observables.csv').read_text()


def test_experiment_mismatch(tmp_path, capsys):
    config = write_config(tmp_path / 'run.toml', 'experiment = "conservation"\n')
    with pytest.raises(SystemExit):
        hbolab.main(['simulate', '--config', config, '--out', str(tmp_path)])
    assert 'describes experiment "conservation", not "simulate"' in capsys.readouterr().out


def test_invalid_entry(tmp_path, capsys):
    config = write_config(tmp_path / 'run.toml', 'point = 256\n')
    with pytest.raises(SystemExit) as excinfo:
        hbolab.main(['simulate', '--config', config, '--out', str(tmp_path)])
    assert excinfo.value.code == 1
    out = capsys.readouterr().out
    assert 'hbolab: error: Unknown configuration entry "point". Did you mean "points"' in out


def test_invalid_threads(tmp_path, capsys):
    with pytest.raises(SystemExit):
        hbolab.main(['conservation', '--threads', '0', '--out', str(tmp_path)])
    assert 'Configuration entry "threads" must be' in capsys.readouterr().out


def test_version(capsys):
    with pytest.raises(SystemExit) as excinfo:
        hbolab.main(['--version'])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.strip() == f'hbolab {hbolab.__version__}'


def test_unknown_experiment(capsys):
    with pytest.raises(SystemExit) as excinfo:
        hbolab.main(['integrate'])
    assert excinfo.value.code == 2
