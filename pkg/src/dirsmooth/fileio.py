"""CSV and JSON files with bit-stable float formatting and atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from .errors import DataError


def format_float(x):
    """17 significant digits, enough to round-trip any float64."""
    return format(float(x), ".17g")


def _format_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format_float(v)


def atomic_write_text(path, text):
    """Write ``text`` to a temporary file next to ``path`` and rename it."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """Write a header line and rows of numbers (bools as 0/1)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def read_csv(path, header):
    """Read a numeric CSV whose header must equal ``header``.

    Returns an (n, len(header)) float array.  Bad rows raise ``DataError``
    naming the line number.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        got = [h.strip() for h in got]
        if got != list(header):
            raise DataError(f"{path}: header {got} does not match {list(header)}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: line {line_no}: expected {len(header)} fields")
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise DataError(f"{path}: line {line_no}: non-numeric field") from None
            if not np.all(np.isfinite(values)):
                raise DataError(f"{path}: line {line_no}: non-finite value")
            rows.append(values)
    return np.array(rows, dtype=float).reshape(-1, len(header))


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
