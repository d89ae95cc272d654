"""Result files: CSV tables, a binary path layout, and JSON reports.

Floats in CSV are written with ``repr``, the shortest decimal string that
reads back to the same 64-bit value. CSV column sets are fixed per schema;
the schema name and version go into the run manifest.

Binary path layout (all little-endian)::

    bytes 0-7    magic b"GGBMPTH1"
    bytes 8-19   uint32 n_paths, uint32 d, uint32 n_times
    then         float64[n_times] grid times
    then         float64[n_paths * d * n_times] values, C order (path, coord, time)
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CSV_SCHEMAS",
    "PATHS_MAGIC",
    "fmt_float",
    "write_csv",
    "read_csv",
    "paths_to_csv",
    "paths_from_csv",
    "paths_to_bytes",
    "paths_from_bytes",
    "dumps_json",
    "loads_json",
]

PATHS_MAGIC = b"GGBMPTH1"
_HEADER = struct.Struct("<8sIII")

#: name -> (version, columns)
CSV_SCHEMAS: dict[str, tuple[int, tuple[str, ...]]] = {
    "paths": (1, ("path_id", "coord", "time_index", "time", "value")),
    "specfun": (1, ("function", "beta", "x", "value", "est_error", "method")),
    "kernel": (1, ("alpha", "t", "s", "closed_form", "quadrature", "abs_diff")),
    "silt": (1, ("beta", "alpha", "d", "t", "eps", "mean", "stderr", "n_paths", "diagonal_included", "oracle", "bias")),
    "sweep": (1, ("eps", "mean", "stderr", "n_paths", "oracle")),
    "checks": (1, ("name", "passed", "measured", "tolerance")),
}


def fmt_float(x) -> str:
    """Shortest round-trip text for a float; integers and strings pass through."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: str | Path, schema: str, rows: Iterable[Sequence]) -> None:
    cols = CSV_SCHEMAS[schema][1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            if len(row) != len(cols):
                raise ValueError(f"{schema} rows need {len(cols)} fields, got {len(row)}")
            w.writerow([fmt_float(v) for v in row])


def read_csv(path: str | Path, schema: str) -> list[dict[str, str]]:
    cols = CSV_SCHEMAS[schema][1]
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if tuple(rd.fieldnames or ()) != cols:
            raise ValueError(f"{path}: header {rd.fieldnames} does not match schema {schema!r}")
        return list(rd)


def _path_rows(values: np.ndarray, times: np.ndarray, first_id: int = 0):
    n_paths, d, n = values.shape
    for p in range(n_paths):
        for c in range(d):
            for i in range(n):
                yield (first_id + p, c, i, float(times[i]), float(values[p, c, i]))


def paths_to_csv(path: str | Path, values: np.ndarray, times: np.ndarray, first_id: int = 0) -> None:
    """Write values of shape (n_paths, d, n) in long format."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[None]
    write_csv(path, "paths", _path_rows(values, np.asarray(times, dtype=float), first_id))


def paths_from_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``paths_to_csv``: returns (values (n_paths, d, n), times)."""
    rows = read_csv(path, "paths")
    ids = sorted({int(r["path_id"]) for r in rows})
    d = 1 + max(int(r["coord"]) for r in rows)
    n = 1 + max(int(r["time_index"]) for r in rows)
    pos = {pid: k for k, pid in enumerate(ids)}
    values = np.full((len(ids), d, n), np.nan)
    times = np.full(n, np.nan)
    for r in rows:
        i = int(r["time_index"])
        values[pos[int(r["path_id"])], int(r["coord"]), i] = float(r["value"])
        times[i] = float(r["time"])
    if np.isnan(values).any():
        raise ValueError(f"{path}: incomplete path table")
    return values, times


def paths_to_bytes(values: np.ndarray, times: np.ndarray) -> bytes:
    values = np.asarray(values, dtype="<f8")
    if values.ndim == 2:
        values = values[None]
    times = np.asarray(times, dtype="<f8")
    n_paths, d, n = values.shape
    if times.shape != (n,):
        raise ValueError("times must match the last axis of values")
    buf = io.BytesIO()
    buf.write(_HEADER.pack(PATHS_MAGIC, n_paths, d, n))
    buf.write(times.tobytes())
    buf.write(np.ascontiguousarray(values).tobytes())
    return buf.getvalue()


def paths_from_bytes(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    if len(data) < _HEADER.size:
        raise ValueError("truncated path file")
    magic, n_paths, d, n = _HEADER.unpack_from(data)
    if magic != PATHS_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    need = _HEADER.size + 8 * n * (1 + n_paths * d)
    if len(data) != need:
        raise ValueError(f"path file has {len(data)} bytes, expected {need}")
    off = _HEADER.size
    times = np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(float)
    off += 8 * n
    values = np.frombuffer(data, dtype="<f8", count=n_paths * d * n, offset=off)
    return values.astype(float).reshape(n_paths, d, n), times


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats.

    Infinite and NaN values are written as the JavaScript literals
    ``Infinity`` and ``NaN``, which ``loads_json`` reads back.
    """
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def loads_json(text: str):
    return json.loads(text)


def is_finite_number(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)
