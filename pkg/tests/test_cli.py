import json
import sys

import pandas as pd
import pytest
from click.testing import CliRunner

from src.definitions import EXIT_CONFIG_ERROR, EXIT_OK
from src.runnable import cli as cli_module
from src.runnable.cli import cli
from src.runnable.collect_results import collect_results
from src.runnable.make_spectrum import main as make_spectrum


def rayleigh_jeans_config(out_dir, **overrides) -> dict:
    raw = {
        'experiment': 'evolve',
        'seed': 0,
        'params': {'beta': -0.25},
        'grid': {'omega_min': 0.1, 'omega_max': 10.0, 'node_count': 16},
        'initial': {'spectrum': {'kind': 'rayleigh_jeans', 'c1': 1.0,
                                 'c2': 0.0}},
        'controller': {'horizon': 0.5, 'dt_init': 0.01,
                       'snapshot_every': 0.25},
        'output': {'directory': str(out_dir), 'run_name': 'rj',
                   'progress': False},
    }
    raw.update(overrides)
    return raw


def invoke(*args):
    return CliRunner().invoke(cli, [str(arg) for arg in args])


def test_missing_grid_is_a_config_error(write_config, tmp_path):
    raw = rayleigh_jeans_config(tmp_path)
    del raw['grid']
    result = invoke('evolve', '--config', write_config(raw))
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert 'grid' in result.output


def test_empty_sweep_is_a_config_error(write_config, tmp_path):
    raw = {'params': {'beta': 0.0},
           'sweep': {'experiment': 'verify', 'overrides': {}}}
    result = invoke('sweep', '--config', write_config(raw), '--out',
                    tmp_path)
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert 'sweep.overrides' in result.output


def test_rayleigh_jeans_evolution_run(write_config, tmp_path):
    path = write_config(rayleigh_jeans_config(tmp_path / 'runs'))
    result = invoke('evolve', '--config', path)
    assert result.exit_code == EXIT_OK, result.output

    run_dir = tmp_path / 'runs' / 'rj'
    for name in ('run.json', 'initial.csv', 'collision_t0.csv',
                 'collision_t0.json', 'diagnostics.csv', 'summary.json',
                 'snap_t0.000000.csv', 'snap_t0.250000.csv',
                 'snap_t0.500000.csv'):
        assert (run_dir / name).exists(), name

    summary = json.loads((run_dir / 'summary.json').read_text())
    assert summary['experiment'] == 'evolve'
    assert summary['exit_status'] == EXIT_OK
    assert summary['status'] == 'horizon_reached'
    assert summary['mass_drift'] <= 1e-6

    metadata = json.loads((run_dir / 'run.json').read_text())
    assert metadata['params']['beta'] == -0.25
    assert len(metadata['config_hash']) == 64

    initial = pd.read_csv(run_dir / 'initial.csv')
    assert set(initial['form']) == {'N'}
    assert initial['value'].tolist() == pytest.approx([1.0] * 16, rel=1e-14)
    collision = pd.read_csv(run_dir / 'collision_t0.csv')
    assert set(collision['form']) == {'C(N)'}

    first = {p.name: p.read_bytes() for p in run_dir.iterdir()
             if p.name != 'run.json'}
    assert invoke('evolve', '--config', path).exit_code == EXIT_OK
    second = {p.name: p.read_bytes() for p in run_dir.iterdir()
              if p.name != 'run.json'}
    assert first == second

    rows = collect_results(tmp_path / 'runs', 'evolve')
    assert len(rows) == 1
    assert rows['beta'].iloc[0] == -0.25


def test_seed_and_out_override_the_config(write_config, tmp_path):
    path = write_config(rayleigh_jeans_config(
        tmp_path / 'ignored', controller={'horizon': 0.05}))
    result = invoke('evolve', '--config', path, '--out', tmp_path / 'other',
                    '--seed', 5)
    assert result.exit_code == EXIT_OK, result.output
    metadata = json.loads(
        (tmp_path / 'other' / 'rj' / 'run.json').read_text())
    assert metadata['config']['seed'] == 5
    assert not (tmp_path / 'ignored').exists()


def test_initial_data_from_file(tmp_path, write_config):
    spectrum = tmp_path / 'rj.csv'
    result = CliRunner().invoke(make_spectrum, [
        '--spectrum', '{kind: rayleigh_jeans}', '--beta', '0.0',
        '--omega-min', '0.1', '--omega-max', '10', '--nodes', '16',
        '-o', str(spectrum),
    ])
    assert result.exit_code == 0, result.output
    assert len(pd.read_csv(spectrum)) == 16

    raw = rayleigh_jeans_config(tmp_path, initial={'path': str(spectrum)})
    result = invoke('evolve', '--config', write_config(raw))
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert 'initial.path' in result.output


def test_make_spectrum_rejects_scalars(tmp_path):
    result = CliRunner().invoke(make_spectrum, [
        '--spectrum', '3', '--beta', '0.0', '-o', str(tmp_path / 'x.csv'),
    ])
    assert result.exit_code != 0


def test_verify_resonance(write_config, tmp_path):
    raw = {'params': {'beta': 0.0}, 'verify': {'suites': ['resonance']},
           'output': {'run_name': 'checks', 'progress': False}}
    result = invoke('verify', '--config', write_config(raw), '--out',
                    tmp_path)
    assert result.exit_code == EXIT_OK, result.output
    report = json.loads((tmp_path / 'checks' / 'verify.json').read_text())
    assert report['all_passed']
    assert report['suites'] == ['resonance']
    assert all(check['pass'] for check in report['checks'].values())


def test_lemma2_run(write_config, tmp_path):
    raw = {'params': {'beta': 0.0}, 'lemma2': {'p': 2.0, 'eps': [0.2, 0.1]},
           'output': {'run_name': 'growth', 'progress': False}}
    result = invoke('lemma2', '--config', write_config(raw), '--out',
                    tmp_path)
    assert result.exit_code == EXIT_OK, result.output
    table = pd.read_csv(tmp_path / 'growth' / 'lemma2.csv')
    assert table['eps'].tolist() == [0.2, 0.1]
    summary = json.loads((tmp_path / 'growth' / 'summary.json').read_text())
    assert summary['eps'] == 0.1


def test_oracle_run_writes_report(write_config, tmp_path):
    raw = {'seed': 1, 'params': {'beta': 0.0},
           'oracle': {'spectrum': {'kind': 'gaussian_bump', 'width': 0.3},
                      'omegas': [1.0], 'samples': 10_000, 'delta': 0.01},
           'output': {'run_name': 'mc', 'progress': False}}
    result = invoke('oracle', '--config', write_config(raw), '--out',
                    tmp_path)
    assert result.exit_code in (0, 1), result.output
    report = json.loads((tmp_path / 'mc' / 'oracle.json').read_text())
    entry = report['estimates'][0]
    assert entry['seed'] == 1
    assert set(entry) >= {'mean', 'std_error', 'sum_form', 'bias', 'passed'}
    assert result.exit_code == (0 if entry['passed'] else 1)


def test_sweep_writes_index(write_config, tmp_path):
    raw = {
        'params': {'beta': 0.0},
        'verify': {'suites': ['resonance']},
        'sweep': {'experiment': 'verify', 'mode': 'zip',
                  'overrides': {'params.beta': [-0.5, 0.5],
                                'verify.betas': [[-0.5], [0.5]]}},
        'output': {'run_name': 'betas', 'progress': False},
    }
    result = invoke('sweep', '--config', write_config(raw), '--out',
                    tmp_path)
    assert result.exit_code == EXIT_OK, result.output
    index = pd.read_csv(tmp_path / 'betas' / 'index.csv')
    assert index['run_id'].tolist() == ['run_000', 'run_001']
    assert index['exit_status'].tolist() == [0, 0]
    assert json.loads(index['overrides'][1]) == {
        'params.beta': 0.5, 'verify.betas': [0.5]}
    for run_id in ('run_000', 'run_001'):
        assert (tmp_path / 'betas' / run_id / 'verify.json').exists()
    summary = json.loads((tmp_path / 'betas' / 'summary.json').read_text())
    assert summary['children'] == 2
    assert summary['failed'] == 0


def test_sweep_with_bad_child_fails_before_running(write_config, tmp_path):
    raw = {
        'params': {'beta': 0.0},
        'sweep': {'experiment': 'verify',
                  'overrides': {'params.beta': [0.0, 2.0]}},
        'output': {'run_name': 'bad'},
    }
    result = invoke('sweep', '--config', write_config(raw), '--out',
                    tmp_path)
    assert result.exit_code == EXIT_CONFIG_ERROR
    assert not (tmp_path / 'bad' / 'run_000').exists()


def test_main_maps_usage_errors_to_config_error(monkeypatch):
    monkeypatch.setattr(sys, 'argv', ['mmt-lab', 'evolve'])
    with pytest.raises(SystemExit) as info:
        cli_module.main()
    assert info.value.code == EXIT_CONFIG_ERROR
