import json

import numpy as np
import pytest
from click.testing import CliRunner

from app import app
from utils.reports import read_pulse_csv

SCENARIO = """chi_mhz=1.3
kerr_khz=-2.1
kappa_mhz=1.1
fock_dim=14
p_norm=1.0
horizon_ns=100
pixel_dt_ns=10
subpixel_dt_ns=5
eps_one_photon_mhz=1.41156
seed=3
"""


@pytest.fixture
def runner():
    return CliRunner()


def scenario_file(tmp_path, extra='', name='scenario.env'):
    path = tmp_path / name
    path.write_text(SCENARIO + extra)
    return str(path)


def read_json(path):
    with open(path, encoding='utf-8') as fh:
        return json.load(fh)


def test_help_lists_units(runner):
    result = runner.invoke(app, ['--help'])
    assert result.exit_code == 0
    assert 'kerr_khz' in result.output and 'MHz' in result.output
    for command in ('calibrate', 'simulate', 'optimize', 'sweep', 'benchmark'):
        assert command in result.output
    sub = runner.invoke(app, ['optimize', '--help'])
    assert 'horizon_ns' in sub.output and '--quick' in sub.output


def test_missing_required_key(runner, tmp_path):
    path = tmp_path / 'partial.env'
    path.write_text('chi_mhz=1.3\nkerr_khz=-2.1\n')
    out = tmp_path / 'out'
    result = runner.invoke(app, ['calibrate', '--config', str(path), '--out', str(out)])
    assert result.exit_code == 1
    assert 'Missing field: kappa_mhz' in result.output
    assert read_json(out / 'manifest.json')['exit_code'] == 1


def test_missing_config(runner, tmp_path):
    result = runner.invoke(app, ['optimize', '--out', str(tmp_path)])
    assert result.exit_code == 1
    assert 'Missing field: config' in result.output


def test_invalid_value(runner, tmp_path):
    path = scenario_file(tmp_path, 'mode=fastest\n')
    result = runner.invoke(app, ['optimize', '--config', path, '--out', str(tmp_path / 'out')])
    assert result.exit_code == 1
    assert 'mode' in result.output or 'fastest' in result.output


def test_calibrate_writes_report_and_manifest(runner, tmp_path):
    out = tmp_path / 'cal'
    result = runner.invoke(app, ['calibrate', '--config', scenario_file(tmp_path), '--out', str(out)])
    assert result.exit_code == 0, result.output
    payload = read_json(out / 'calibration.json')
    assert payload['analytic']['eps_one_photon_mhz'] == pytest.approx(1.41156, abs=1e-4)
    assert payload['numeric']['method'] == 'numeric-steady-state'
    assert payload['relative_agreement'] < 0.05
    assert 'deviation_vs_reference' in payload['analytic']
    manifest = read_json(out / 'manifest.json')
    assert manifest['command'] == 'calibrate'
    assert manifest['exit_code'] == 0
    assert manifest['outputs'] == ['calibration.json']
    assert manifest['versions']['library']


def test_passive_optimize_writes_no_pulse(runner, tmp_path):
    out = tmp_path / 'passive'
    path = scenario_file(tmp_path, 'mode=passive\n')
    result = runner.invoke(app, ['optimize', '--config', path, '--out', str(out), '--quick'])
    assert result.exit_code == 0, result.output
    assert (out / 'photon_vs_time.csv').exists()
    assert not (out / 'pulse.csv').exists()
    report = read_json(out / 'report.json')
    assert report['mode'] == 'passive'
    assert report['passive_monotonic'] is True
    header = (out / 'photon_vs_time.csv').read_text().splitlines()[0]
    assert header == 't_ns,n_ground,n_excited'


def test_clear_pulse_is_reproducible_and_simulates(runner, tmp_path):
    path = scenario_file(tmp_path, 'mode=clear\n')
    first, second = tmp_path / 'a', tmp_path / 'b'
    for out in (first, second):
        result = runner.invoke(app, ['optimize', '--config', path, '--out', str(out)])
        assert result.exit_code == 0, result.output
    assert (first / 'pulse.csv').read_bytes() == (second / 'pulse.csv').read_bytes()
    assert (first / 'pulse.csv').read_text().splitlines()[0] == 't_ns,u_1,u_2'
    times, values = read_pulse_csv(first / 'pulse.csv')
    assert values.shape == (10, 2)
    assert np.all(values[:, 1] == 0.0)

    sim = tmp_path / 'sim'
    result = runner.invoke(app, ['simulate', '--config', path, '--out', str(sim),
                                 '--pulse', str(first / 'pulse.csv')])
    assert result.exit_code == 0, result.output
    simulated = read_json(sim / 'report.json')
    optimized = read_json(first / 'report.json')
    assert simulated['mode'] == 'simulate'
    for label in ('ground', 'excited'):
        assert simulated['final_photons'][label] == pytest.approx(optimized['final_photons'][label], rel=1e-6)


def test_seed_override_is_recorded(runner, tmp_path):
    out = tmp_path / 'seeded'
    result = runner.invoke(app, ['simulate', '--config', scenario_file(tmp_path), '--out', str(out),
                                 '--seed', '42'])
    assert result.exit_code == 0, result.output
    assert read_json(out / 'manifest.json')['seed'] == 42


def test_benchmark_with_explicit_dims(runner, tmp_path):
    path = tmp_path / 'bench.env'
    path.write_text('dims=3,4\nn_pixels=5\nrepetitions=1\n')
    out = tmp_path / 'bench'
    result = runner.invoke(app, ['benchmark', '--config', str(path), '--out', str(out)])
    assert result.exit_code == 0, result.output
    rows = np.loadtxt(out / 'benchmark.csv', delimiter=',', skiprows=1, ndmin=2)
    assert rows[:, 0].tolist() == [3.0, 4.0]
    assert read_json(out / 'benchmark.json')['max_trace_dist'] < 1e-6


def test_sweep_requires_lists(runner, tmp_path):
    result = runner.invoke(app, ['sweep', '--config', scenario_file(tmp_path), '--out', str(tmp_path / 'sw')])
    assert result.exit_code == 1
    assert 'Missing field: p_norm_list' in result.output


def test_single_point_sweep(runner, tmp_path):
    path = scenario_file(tmp_path, 'p_norm_list=1.0\nhorizon_list=100\nmax_iters=5\n')
    out = tmp_path / 'sweep'
    result = runner.invoke(app, ['sweep', '--config', path, '--out', str(out)])
    assert result.exit_code == 0, result.output
    payload = read_json(out / 'sweep.json')
    assert payload['alpha'] is None
    assert (out / 'sweep.csv').read_text().splitlines()[0] == \
        'p_norm,horizon_ns,final_ground,final_excited,failed,stalled'
