#!/usr/bin/env python3
"""Tests for the command-line front end"""

import json
import os

import pandas as pd
import pytest

from main import main, parse_spec, region_labels, EXIT_OK, EXIT_UNSUPPORTED


def _config(fixtures_dir, name):
    return os.path.join(fixtures_dir, f'test_params_{name}.json')


def test_regimes_to_file(tmp_path):
    out = tmp_path / 'regimes.json'
    code = main(['regimes', '--lambda', '0.82', '--alpha', '1', '--delta', '1', '--out', str(out)])
    assert code == EXIT_OK
    record = json.loads(out.read_text())
    assert record['regime'] == 'VShape'
    assert record['params']['lambda'] == pytest.approx(0.82)
    assert record['boundary_warning'] is False
    assert record['f0'] == pytest.approx(1.52, abs=0.01)


def test_regimes_to_stdout_keeps_logs_on_stderr(capsys):
    assert main(['regimes', '--lambda', '1.5', '--alpha', '1', '--delta', '1']) == EXIT_OK
    captured = capsys.readouterr()
    record = json.loads(captured.out)
    assert record['regime'] == 'HighCost'
    assert record['f0'] is None


def test_missing_parameter_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        parse_spec(['regimes', '--alpha', '1', '--delta', '1'])
    assert excinfo.value.code == 2


def test_invalid_config_file_is_a_usage_error(fixtures_dir):
    with pytest.raises(SystemExit) as excinfo:
        parse_spec(['regimes', '--config', _config(fixtures_dir, 'invalid')])
    assert excinfo.value.code == 2


def test_simulate_needs_a_point(fixtures_dir):
    with pytest.raises(SystemExit) as excinfo:
        parse_spec(['simulate', '--config', _config(fixtures_dir, 'high_cost')])
    assert excinfo.value.code == 2


def test_flags_override_config_file(fixtures_dir):
    spec = parse_spec(['boundaries', '--config', _config(fixtures_dir, 'vshape'), '--lambda', '0.9', '--dx', '0.05'])
    assert spec.params.lam == 0.9
    assert spec.settings.dx == 0.05
    assert spec.settings.tol == 1e-10
    assert spec.settings.paths == 200


def test_relative_outputs_go_to_output_dir(fixtures_dir, tmp_path, monkeypatch):
    monkeypatch.setenv('FUELCTRL_OUTPUT_DIR', str(tmp_path))
    spec = parse_spec(['simulate', '--config', _config(fixtures_dir, 'high_cost'), '--point', '0.7', '0.5',
                       '--out', 'mc.csv', '--events', 'events.jsonl'])
    assert spec.out == os.path.join(str(tmp_path), 'mc.csv')
    assert spec.extras['events'] == os.path.join(str(tmp_path), 'events.jsonl')
    assert parse_spec(['regimes', '--config', _config(fixtures_dir, 'high_cost')]).out == '-'


def test_legacy_regime_exits_with_three(fixtures_dir, tmp_path, capfd):
    code = main(['boundaries', '--config', _config(fixtures_dir, 'legacy'), '--out', str(tmp_path / 'b.csv')])
    assert code == EXIT_UNSUPPORTED
    assert 'lambda_star' in capfd.readouterr().err


def test_high_cost_boundaries_table(fixtures_dir, tmp_path):
    out = tmp_path / 'boundaries.csv'
    code = main(['boundaries', '--config', _config(fixtures_dir, 'high_cost'),
                 '--cmax', '1', '--dx', '0.1', '--out', str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ['c', 'F', 'G', 'Fbar', 'Gbar', 'type_F', 'type_G']
    assert (frame['F'] == 0.5).all()
    assert b'\r\n' not in out.read_bytes()


def test_high_cost_value_surface(fixtures_dir, tmp_path):
    out = tmp_path / 'value.csv'
    code = main(['value', '--config', _config(fixtures_dir, 'high_cost'), '--cmax', '0.5',
                 '--xmax', '2', '--dx', '0.1', '--out', str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert len(frame) == 21 * 6
    row = frame[(frame['x'].round(6) == 0.3) & (frame['c'].round(6) == 0.5)]
    assert row['Q'].iloc[0] == pytest.approx(0.09)


def test_high_cost_verify_passes(fixtures_dir, tmp_path):
    out = tmp_path / 'verify.json'
    code = main(['verify', '--config', _config(fixtures_dir, 'high_cost'), '--nx', '40', '--nc', '20',
                 '--out', str(out)])
    assert code == EXIT_OK
    assert json.loads(out.read_text())['passed'] is True


def test_high_cost_simulation_with_events(fixtures_dir, tmp_path):
    out = tmp_path / 'mc.csv'
    events = tmp_path / 'events.jsonl'
    code = main(['simulate', '--config', _config(fixtures_dir, 'high_cost'), '--point', '0.7', '0.5',
                 '--paths', '8', '--dt', '0.01', '--events', str(events), '--out', str(out)])
    assert code == EXIT_OK
    frame = pd.read_csv(out)
    assert frame.loc[0, 'mean'] == pytest.approx(frame.loc[0, 'value'], rel=1e-12)
    lines = [json.loads(line) for line in events.read_text().splitlines()]
    assert {line['kind'] for line in lines} == {'jump', 'stop'}


def test_high_cost_phase_diagram_with_workbook(fixtures_dir, tmp_path):
    curves = tmp_path / 'curves.csv'
    regions = tmp_path / 'regions.csv'
    workbook = tmp_path / 'phase.xlsx'
    code = main(['phase-diagram', '--config', _config(fixtures_dir, 'high_cost'), '--cmax', '0.4',
                 '--xmax', '1.5', '--dx', '0.1', '--out', str(curves), '--regions-out', str(regions),
                 '--xlsx', str(workbook)])
    assert code == EXIT_OK
    labels = pd.read_csv(regions)
    assert list(labels.columns) == ['x', 'c', 'region', 'zeta']
    assert set(labels.loc[labels['x'] < 0.45, 'region']) == {'I'}
    # xlsx files are zip archives
    assert workbook.read_bytes()[:2] == b'PK'


def test_region_labels(vlambda_value):
    c = 0.5 * vlambda_value.levels.c_I
    sl = vlambda_value.slice(c)
    frame = region_labels(vlambda_value, [0.5 * sl.F, 0.5 * (sl.Fbar + sl.Gbar)], [c])
    assert list(frame['region']) == ['I', 'III']


def test_oneshot_trace_and_minorant(fixtures_dir, tmp_path):
    out = tmp_path / 'trace.csv'
    minorant = tmp_path / 'minorant.json'
    code = main(['oneshot', '--config', _config(fixtures_dir, 'vshape'), '--fuel', '0.1', '--xmax', '3',
                 '--dx', '0.05', '--out', str(out), '--minorant-out', str(minorant)])
    assert code == EXIT_OK
    trace = pd.read_csv(out)
    assert list(trace.columns) == ['x', 'y', 'H', 'dH', 'd2H', 'W', 'value']
    assert (trace['W'] <= trace['H'] + 1e-9 * (1.0 + trace['H'].abs())).all()
    assert (trace['value'] <= trace['x'] ** 2 + 1e-9).all()
    record = json.loads(minorant.read_text())
    assert record['method'] == 'analytic'
    assert [piece['kind'] for piece in record['pieces']] == ['obstacle', 'linear', 'obstacle']
    assert record['pieces'][-1]['y_hi'] is None


def test_negative_fuel_is_a_usage_error(fixtures_dir):
    with pytest.raises(SystemExit) as excinfo:
        parse_spec(['oneshot', '--config', _config(fixtures_dir, 'vshape'), '--fuel', '-0.1'])
    assert excinfo.value.code == 2


def test_coefficient_summary_export(fixtures_dir, tmp_path):
    coefficients = tmp_path / 'coefficients.json'
    code = main(['value', '--config', _config(fixtures_dir, 'vshape'), '--cmax', '0.2', '--xmax', '2',
                 '--dx', '0.1', '--out', str(tmp_path / 'value.csv'), '--coefficients', str(coefficients)])
    assert code == EXIT_OK
    summary = json.loads(coefficients.read_text())
    assert len(summary['c']) == 2
    assert all(value is None for value in summary['A_tilde'])
