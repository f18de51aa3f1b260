#!/usr/bin/env python3
"""
Logging helpers shared by the solver automations.
Long floating-point literals produced by root finders and ODE integrators are
shortened to a readable number of significant digits before records reach the
console, and every handler writes to standard error so that standard output
stays reserved for data artifacts.
"""

import os
import re
import sys
import json
import math
import logging
from typing import Any, Dict, List, Optional, Union


class NumericPrecisionFilter(logging.Filter):
    """
    Logging filter that shortens floating-point numbers in log records.
    Keeps residuals and boundary locations readable in progress logs while the
    artifacts written to disk keep full precision.
    """

    # Decimal or scientific literal with at least one digit after the point
    FLOAT_PATTERN = re.compile(
        r'(?<![\w.])[-+]?\d+\.\d+(?:[eE][-+]?\d+)?(?![\w.])'
    )

    # Scientific literal without a decimal point (1e-10, 5E+03)
    SCIENTIFIC_PATTERN = re.compile(
        r'(?<![\w.])[-+]?\d+[eE][-+]?\d+(?![\w.])'
    )

    NON_FINITE_TOKENS = {
        'nan': 'NaN',
        'inf': '+inf',
        '-inf': '-inf',
    }

    def __init__(self, significant_digits: int = 6):
        """
        Initialize the numeric precision filter.

        Args:
            significant_digits: Number of significant digits kept for floats
        """
        super().__init__()
        if significant_digits < 1:
            raise ValueError("significant_digits must be positive")
        self.significant_digits = significant_digits

    def filter(self, record: logging.LogRecord) -> bool:
        """
        Shorten numbers in the record message and arguments.

        Args:
            record: The log record to filter

        Returns:
            True to allow the record through (after shortening)
        """
        if hasattr(record, 'msg') and isinstance(record.msg, str):
            record.msg = self._shorten_text(record.msg)

        if hasattr(record, 'args') and record.args:
            if isinstance(record.args, dict):
                record.args = self._shorten_dict(record.args)
            else:
                record.args = self._shorten_args(record.args)

        return True

    def format_number(self, value: Union[int, float]) -> str:
        """
        Render a number with the configured significant digits.

        Args:
            value: Number to render

        Returns:
            Short string representation
        """
        if isinstance(value, bool) or isinstance(value, int):
            return str(value)
        if math.isnan(value):
            return self.NON_FINITE_TOKENS['nan']
        if math.isinf(value):
            return self.NON_FINITE_TOKENS['inf' if value > 0 else '-inf']
        return f"{value:.{self.significant_digits}g}"

    def _shorten_text(self, text: str) -> str:
        if not text:
            return text

        shortened = self.FLOAT_PATTERN.sub(
            lambda m: self.format_number(float(m.group(0))),
            text
        )
        shortened = self.SCIENTIFIC_PATTERN.sub(
            lambda m: self.format_number(float(m.group(0))),
            shortened
        )
        return shortened

    def _shorten_args(self, args: tuple) -> tuple:
        """
        Shorten numeric arguments used in %-style formatting.

        Args:
            args: Tuple of record arguments

        Returns:
            Tuple with floats replaced by short strings where safe
        """
        shortened_args = []

        for arg in args:
            if isinstance(arg, float):
                # %-placeholders such as %.3e still need a float
                shortened_args.append(float(self.format_number(arg))
                                      if math.isfinite(arg) else arg)
            elif isinstance(arg, str):
                shortened_args.append(self._shorten_text(arg))
            elif isinstance(arg, dict):
                shortened_args.append(self._shorten_dict(arg))
            elif isinstance(arg, (list, tuple)):
                shortened_args.append(self._shorten_list(list(arg)))
            else:
                shortened_args.append(arg)

        return tuple(shortened_args)

    def _shorten_dict(self, data: Dict[str, Any]) -> Dict[str, Any]:
        shortened = {}

        for key, value in data.items():
            if isinstance(value, float):
                shortened[key] = self.format_number(value)
            elif isinstance(value, dict):
                shortened[key] = self._shorten_dict(value)
            elif isinstance(value, (list, tuple)):
                shortened[key] = self._shorten_list(list(value))
            elif isinstance(value, str):
                shortened[key] = self._shorten_text(value)
            else:
                shortened[key] = value

        return shortened

    def _shorten_list(self, data: List[Any]) -> List[Any]:
        shortened = []

        for item in data:
            if isinstance(item, float):
                shortened.append(self.format_number(item))
            elif isinstance(item, dict):
                shortened.append(self._shorten_dict(item))
            elif isinstance(item, (list, tuple)):
                shortened.append(self._shorten_list(list(item)))
            elif isinstance(item, str):
                shortened.append(self._shorten_text(item))
            else:
                shortened.append(item)

        return shortened

    def shorten_json(self, json_data: Union[str, dict]) -> str:
        """
        Shorten a JSON document for logging.

        Args:
            json_data: JSON string or dictionary

        Returns:
            JSON string with shortened numbers
        """
        try:
            if isinstance(json_data, str):
                data = json.loads(json_data)
            else:
                data = json_data

            return json.dumps(self._shorten_dict(data), indent=2, sort_keys=True)

        except (json.JSONDecodeError, TypeError):
            return self._shorten_text(str(json_data))


def _level_from_env(default: int = logging.INFO) -> int:
    name = os.getenv('FUELCTRL_LOG_LEVEL', '').strip().upper()
    if not name:
        return default
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else default


def setup_solver_logging(
    name: str,
    level: Optional[int] = None,
    format_string: Optional[str] = None,
    significant_digits: int = 6
) -> logging.Logger:
    """
    Set up a logger that writes shortened numbers to standard error.

    Args:
        name: Logger name
        level: Logging level (FUELCTRL_LOG_LEVEL or INFO when omitted)
        format_string: Custom format string
        significant_digits: Digits kept by the numeric filter

    Returns:
        Configured logger
    """
    if format_string is None:
        format_string = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    if level is None:
        level = _level_from_env()

    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False

    # Remove existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(logging.Formatter(format_string))
    console_handler.addFilter(NumericPrecisionFilter(significant_digits))

    logger.addHandler(console_handler)

    return logger


def create_log_filter(significant_digits: int = 6) -> NumericPrecisionFilter:
    """
    Create a standalone numeric precision filter instance.

    Returns:
        NumericPrecisionFilter instance
    """
    return NumericPrecisionFilter(significant_digits)


if __name__ == "__main__":
    demo_logger = setup_solver_logging('demo_logger', logging.INFO)

    demo_logger.info("f0 = 0.5176380902050415, lambda_dagger = 0.6343910293841238")
    demo_logger.info("tangency residual 3.4416913763379853e-13 at c = 0.125")
    demo_logger.info("worst slack %s at %s", -2.220446049250313e-16, (0.73125, 0.2))

    filter_instance = create_log_filter()
    print(filter_instance.shorten_json({"c_bar": 0.41999999999999993, "g0": float('inf')}))
