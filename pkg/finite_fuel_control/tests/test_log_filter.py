#!/usr/bin/env python3
"""Tests for the shared logging helpers"""

import logging

import pytest

from log_filter import NumericPrecisionFilter, setup_solver_logging, create_log_filter


def _record(msg, args=()):
    return logging.LogRecord('t', logging.INFO, __file__, 1, msg, args, None)


def test_long_floats_are_shortened_in_messages():
    record = _record("f0 = 0.5176380902050415 at c = 1.2345678901e-05")
    NumericPrecisionFilter(6).filter(record)
    assert record.msg == "f0 = 0.517638 at c = 1.23457e-05"


def test_short_numbers_and_words_are_kept():
    record = _record("row 12 of 400 (x1.5)")
    NumericPrecisionFilter(6).filter(record)
    assert record.msg == "row 12 of 400 (x1.5)"


def test_non_finite_values_become_tokens():
    f = create_log_filter()
    assert f.format_number(float('nan')) == 'NaN'
    assert f.format_number(float('inf')) == '+inf'
    assert f.format_number(float('-inf')) == '-inf'


def test_nested_arguments_are_shortened():
    record = _record("state %s", ({'c_bar': 0.41999999999999993, 'pts': [1.0000000001, 2]},))
    NumericPrecisionFilter(4).filter(record)
    shortened = record.args
    assert shortened['c_bar'] == '0.42'
    assert shortened['pts'] == ['1', 2]


def test_float_arguments_remain_numbers():
    record = _record("residual %.3e", (3.4416913763379853e-13,))
    NumericPrecisionFilter(6).filter(record)
    assert isinstance(record.args[0], float)
    assert record.getMessage() == "residual 3.442e-13"


def test_shorten_json_handles_text_and_dicts():
    f = create_log_filter(3)
    assert '"g0": "+inf"' in f.shorten_json({'g0': float('inf')})
    assert f.shorten_json('not json 0.123456') == 'not json 0.123'


def test_invalid_digits_rejected():
    with pytest.raises(ValueError):
        NumericPrecisionFilter(0)


def test_logger_writes_to_stderr_without_duplicates(capsys):
    logger = setup_solver_logging('test_stderr_logger')
    logger = setup_solver_logging('test_stderr_logger')
    assert len(logger.handlers) == 1
    logger.info("value 3.14159265358979")
    captured = capsys.readouterr()
    assert captured.out == ''
    assert captured.err.count('value 3.14159') == 1


def test_level_from_environment(monkeypatch):
    monkeypatch.setenv('FUELCTRL_LOG_LEVEL', 'WARNING')
    logger = setup_solver_logging('test_env_level_logger')
    assert logger.level == logging.WARNING
