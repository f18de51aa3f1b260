#!/usr/bin/env python3
"""
Artifact writers: CSV tables, JSON records, JSON-lines event logs and an
optional Excel workbook. Writers take a path, or '-' for standard output.
"""

import os
import sys
import json
import math
from typing import Any, Dict, Iterable, Optional, TextIO

import numpy as np
import pandas as pd

sys.path.append(os.path.join(os.path.dirname(__file__), '..', '..'))
from log_filter import setup_solver_logging

logger = setup_solver_logging('exporters')

FLOAT_FORMAT = '%.17g'
STDOUT = '-'


def _jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become null"""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def to_json_text(record: Any) -> str:
    return json.dumps(_jsonable(record), indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def _open(path: str) -> TextIO:
    if path == STDOUT:
        return sys.stdout
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    return open(path, 'w', encoding='utf-8', newline='')


def write_table(frame: pd.DataFrame, path: str, fmt: str = 'csv') -> str:
    """
    Write a table as CSV (17 significant digits, LF endings) or JSON records.

    Args:
        frame: Table to write
        path: Output file or '-'
        fmt: 'csv' or 'json'

    Returns:
        The path written
    """
    if fmt not in ('csv', 'json'):
        raise ValueError(f"Unsupported format: {fmt}")
    handle = _open(path)
    try:
        if fmt == 'csv':
            frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        else:
            handle.write(to_json_text(frame.to_dict(orient='records')))
    finally:
        if handle is not sys.stdout:
            handle.close()
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(record: Any, path: str) -> str:
    """Write one JSON document with sorted keys"""
    handle = _open(path)
    try:
        handle.write(to_json_text(record))
    finally:
        if handle is not sys.stdout:
            handle.close()
    logger.info(f"Wrote JSON to {path}")
    return path


def write_jsonl(records: Iterable[Dict[str, Any]], path: str) -> int:
    """
    Write one JSON object per line.

    Args:
        records: Records (event logs)
        path: Output file or '-'

    Returns:
        Number of lines written
    """
    count = 0
    handle = _open(path)
    try:
        for record in records:
            handle.write(json.dumps(_jsonable(record), sort_keys=True) + '\n')
            count += 1
    finally:
        if handle is not sys.stdout:
            handle.close()
    logger.info(f"Wrote {count} events to {path}")
    return count


def write_workbook(sheets: Dict[str, pd.DataFrame], path: str,
                   notes: Optional[Dict[str, Any]] = None) -> str:
    """
    Excel workbook with one sheet per table.

    Args:
        sheets: Sheet name -> table
        path: Output .xlsx file
        notes: Optional key/value pairs written to a 'summary' sheet

    Returns:
        The path written
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with pd.ExcelWriter(path, engine='xlsxwriter') as writer:
        if notes:
            summary = pd.DataFrame([{'key': k, 'value': _jsonable(v)} for k, v in sorted(notes.items())])
            summary.to_excel(writer, sheet_name='summary', index=False)
        for name, frame in sheets.items():
            # sheet names are limited to 31 characters
            frame.to_excel(writer, sheet_name=name[:31], index=False)
            worksheet = writer.sheets[name[:31]]
            worksheet.freeze_panes(1, 0)
            worksheet.set_column(0, max(len(frame.columns) - 1, 0), 14)
    logger.info(f"Wrote workbook with {len(sheets)} sheets to {path}")
    return path
