"""Dataset CSV reading and writing.

The on-disk format is a header ``x1,...,xd`` optionally followed by ``y``,
then one numeric row per observation.  Values are written with 17
significant digits, so a write/read round trip reproduces float64 data
bit-exactly.
"""
from __future__ import annotations

import csv
import math
from typing import TextIO

import numpy as np

from .exceptions import DatasetFormatError

__all__ = ["dataset_header", "read_dataset", "write_dataset"]


def dataset_header(dimension: int, with_response: bool) -> list[str]:
    header = [f"x{k}" for k in range(1, dimension + 1)]
    if with_response:
        header.append("y")
    return header


def _parse_header(header: list[str] | None) -> tuple[int, bool]:
    if not header:
        raise DatasetFormatError("line 1: missing header")
    names = [name.strip() for name in header]
    with_response = names[-1] == "y"
    if with_response:
        names = names[:-1]
    expected = [f"x{k}" for k in range(1, len(names) + 1)]
    if not names or names != expected:
        raise DatasetFormatError(
            "line 1: header must be x1..xd optionally followed by y, got " + ",".join(header)
        )
    return len(names), with_response


def read_dataset(source) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a dataset from a path or an open text stream.

    Returns (x, y) with y None when the file has no response column.
    Ragged rows, non-numeric cells, and non-finite values raise a
    DatasetFormatError naming the offending line.
    """
    if hasattr(source, "read"):
        return _read_stream(source)
    with open(source, newline="") as stream:
        return _read_stream(stream)


def _read_stream(stream: TextIO) -> tuple[np.ndarray, np.ndarray | None]:
    reader = csv.reader(stream)
    dimension, with_response = _parse_header(next(reader, None))
    width = dimension + int(with_response)
    rows: list[list[float]] = []
    for record in reader:
        line = reader.line_num
        if not record:
            continue
        if len(record) != width:
            raise DatasetFormatError(f"line {line}: expected {width} columns, got {len(record)}")
        values = []
        for cell in record:
            try:
                value = float(cell)
            except ValueError:
                raise DatasetFormatError(f"line {line}: non-numeric value {cell.strip()!r}") from None
            if not math.isfinite(value):
                raise DatasetFormatError(f"line {line}: non-finite value {cell.strip()!r}")
            values.append(value)
        rows.append(values)
    if not rows:
        raise DatasetFormatError("dataset has a header but no rows")
    data = np.asarray(rows)
    if with_response:
        return data[:, :-1], data[:, -1]
    return data, None


def write_dataset(target, x: np.ndarray, y: np.ndarray | None = None) -> None:
    """Write a dataset to a path or an open text stream with 17 significant
    digits per value."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if hasattr(target, "write"):
        _write_stream(target, x, y)
        return
    with open(target, "w", newline="") as stream:
        _write_stream(stream, x, y)


def _write_stream(stream: TextIO, x: np.ndarray, y: np.ndarray | None) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(dataset_header(x.shape[1], y is not None))
    for index in range(x.shape[0]):
        row = ["%.17g" % value for value in x[index]]
        if y is not None:
            row.append("%.17g" % y[index])
        writer.writerow(row)
