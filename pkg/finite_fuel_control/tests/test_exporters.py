#!/usr/bin/env python3
"""Tests for the artifact writers"""

import json
import math

import numpy as np
import pandas as pd
import pytest

from exporters import to_json_text, write_table, write_json, write_jsonl, write_workbook


def test_csv_keeps_full_precision_and_lf_endings(tmp_path):
    out = tmp_path / 'table.csv'
    write_table(pd.DataFrame({'x': [1.0 / 3.0, 2.0], 'region': ['I', 'II']}), str(out))
    raw = out.read_bytes()
    assert b'\r\n' not in raw
    assert float(raw.decode().splitlines()[1].split(',')[0]) == 1.0 / 3.0


def test_json_table_and_stdout(capsys):
    write_table(pd.DataFrame({'c': [0.5], 'Fbar': [math.nan]}), '-', 'json')
    assert json.loads(capsys.readouterr().out) == [{'Fbar': None, 'c': 0.5}]


def test_unknown_format_is_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_table(pd.DataFrame({'x': [1.0]}), str(tmp_path / 't.txt'), 'parquet')


def test_non_finite_values_become_null(tmp_path):
    out = tmp_path / 'nested' / 'record.json'
    write_json({'g0': math.inf, 'values': np.array([1.0, -np.inf]), 'n': np.int64(3)}, str(out))
    assert json.loads(out.read_text()) == {'g0': None, 'n': 3, 'values': [1.0, None]}
    assert to_json_text({'b': 1, 'a': 2}).index('"a"') < to_json_text({'b': 1, 'a': 2}).index('"b"')


def test_jsonl_writes_one_object_per_line(tmp_path):
    out = tmp_path / 'events.jsonl'
    count = write_jsonl(({'kind': 'jump', 't': 0.0, 'size': 0.1 * i} for i in range(3)), str(out))
    lines = out.read_text().splitlines()
    assert count == len(lines) == 3
    assert json.loads(lines[2])['size'] == pytest.approx(0.2)


def test_workbook_is_written(tmp_path):
    out = tmp_path / 'book.xlsx'
    write_workbook({'boundaries': pd.DataFrame({'c': [0.1], 'F': [0.4]})}, str(out),
                   notes={'lambda': 0.82, 'c_I': math.inf})
    assert out.exists()
    assert out.read_bytes()[:2] == b'PK'
