"""CSV and JSON readers and writers with lossless float formatting."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .model import PairedSample

__all__ = [
    "format_float",
    "write_matrix_csv",
    "read_matrix_csv",
    "write_paired_csv",
    "read_paired_csv",
    "write_records_csv",
    "read_records_csv",
    "write_json",
    "read_json",
]


def format_float(v: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(v), ".17g")


def _header(prefix: str, k: int) -> list[str]:
    return [f"{prefix}{j}" for j in range(1, k + 1)]


def write_matrix_csv(path, mat, prefix: str = "x") -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_header(prefix, mat.shape[1]))
        for row in mat:
            w.writerow([format_float(v) for v in row])


def _parse_rows(rows, path) -> np.ndarray:
    try:
        data = np.array([[float(v) for v in row] for row in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    return data


def read_matrix_csv(path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix_csv`; the header names are not checked."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    if any(len(r) != len(header) for r in body):
        raise ValueError(f"{path}: ragged rows (header has {len(header)} columns)")
    if not body:
        raise ValueError(f"{path}: no data rows")
    return _parse_rows(body, path)


def write_paired_csv(path, sample: PairedSample) -> None:
    """One file holding both blocks: a ``block`` column, then ``x*`` and ``y*`` columns."""
    p, q = sample.x.shape[1], sample.y.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["block"] + _header("x", p) + _header("y", q))
        for row in sample.x:
            w.writerow(["x"] + [format_float(v) for v in row] + [""] * q)
        for row in sample.y:
            w.writerow(["y"] + [""] * p + [format_float(v) for v in row])


def read_paired_csv(path) -> PairedSample:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["block"]:
        raise ValueError(f"{path}: expected a leading 'block' column")
    header = rows[0]
    xcols = [j for j, h in enumerate(header) if h.startswith("x")]
    ycols = [j for j, h in enumerate(header) if h.startswith("y")]
    xs, ys = [], []
    for row in rows[1:]:
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"{path}: ragged row")
        if row[0] == "x":
            xs.append([row[j] for j in xcols])
        elif row[0] == "y":
            ys.append([row[j] for j in ycols])
        else:
            raise ValueError(f"{path}: unknown block label {row[0]!r}")
    return PairedSample(_parse_rows(xs, path), _parse_rows(ys, path))


def write_records_csv(path_or_file, records, columns) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(columns)
        for rec in records:
            w.writerow([_cell(rec[c]) for c in columns])
    finally:
        if own:
            fh.close()


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def read_records_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(path_or_file, obj) -> None:
    """JSON floats use ``repr``, which already round-trips exactly."""
    text = json.dumps(obj, indent=2, default=_json_default)
    if isinstance(path_or_file, (str, Path)):
        Path(path_or_file).write_text(text + "\n")
    else:
        path_or_file.write(text + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
