"""Delimited-text input and output for observed matrices."""
from __future__ import annotations

import csv
import io
import math
from typing import Iterable

import numpy as np

from .errors import InputError
from .kernels import ObservedMatrix

DEFAULT_NA = ("NA",)


def _is_missing(field: str, na_tokens) -> bool:
    return field == "" or field in na_tokens


def _parse_number(field: str):
    try:
        x = float(field)
    except ValueError:
        return None
    return x


def read_matrix(text: str, delimiter: str = ",", na_tokens: Iterable[str] = DEFAULT_NA,
                header: bool | None = None):
    """Parse delimited text into ``(ObservedMatrix, column_names)``.

    Empty fields and any of ``na_tokens`` are missing.  With
    ``header=None`` the first row is a header when it contains a field that
    is neither numeric nor missing.  ``column_names`` is ``None`` without a
    header.
    """
    na_tokens = set(na_tokens)
    rows = [[f.strip() for f in r] for r in csv.reader(io.StringIO(text), delimiter=delimiter)]
    rows = [r for r in rows if any(r)]
    if not rows:
        raise InputError("input contains no data rows")
    if header is None:
        header = any(not _is_missing(f, na_tokens) and _parse_number(f) is None for f in rows[0])
    names = rows[0] if header else None
    body = rows[1:] if header else rows
    first_line = 2 if header else 1
    width = len(rows[0])
    values = np.zeros((len(body), width))
    mask = np.zeros((len(body), width), dtype=np.int8)
    for i, row in enumerate(body):
        line = first_line + i
        if len(row) != width:
            raise InputError(f"row {line}: expected {width} fields, found {len(row)}")
        for k, field in enumerate(row):
            if _is_missing(field, na_tokens):
                continue
            x = _parse_number(field)
            if x is None:
                raise InputError(f"row {line}, column {k + 1}: non-numeric value {field!r}")
            if not math.isfinite(x):
                raise InputError(f"row {line}, column {k + 1}: non-finite value {field!r} "
                                 f"(add it with --na-token if it marks a missing cell)")
            values[i, k] = x
            mask[i, k] = 1
    if len(body) < 2 or width < 2:
        raise InputError(f"need at least 2 rows and 2 columns, got {len(body)} x {width}")
    return ObservedMatrix(values, mask), names


def read_matrix_file(path, **kwargs):
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return read_matrix(text, **kwargs)


def write_matrix(m: ObservedMatrix, names=None, delimiter: str = ",", na_token: str = "NA") -> str:
    """Render a matrix; ``repr`` floats so a re-read is bit-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    if names is not None:
        w.writerow(names)
    for vals, obs in zip(m.values.tolist(), m.mask.tolist()):
        w.writerow([repr(v) if o else na_token for v, o in zip(vals, obs)])
    return buf.getvalue()
