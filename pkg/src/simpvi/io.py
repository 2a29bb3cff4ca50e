"""CSV/JSON persistence and the flat key/value config file."""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FLOAT_FORMAT = "%.17g"


def write_csv(path, header, rows) -> Path:
    """Comma-separated, header row, LF endings, 17 significant digits."""
    path = Path(path)
    data = np.atleast_2d(np.asarray(rows, dtype=float))
    if data.size == 0:
        data = data.reshape(0, len(header))
    if data.shape[1] != len(header):
        raise ValueError(f"{len(header)} columns in header but rows have {data.shape[1]}")
    lines = [",".join(header)]
    lines += [",".join(FLOAT_FORMAT % v for v in row) for row in data]
    path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`; returns ``(header, array)``."""
    text = Path(path).read_text(encoding="ascii").splitlines()
    header = text[0].split(",")
    rows = [[float(v) for v in line.split(",")] for line in text[1:] if line]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    return path


def read_config(path) -> dict:
    """Flat TOML table of option names to values; nested tables are rejected."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ValueError(f"config must be flat key/value pairs; found tables {nested}")
    return {k.replace("-", "_"): v for k, v in data.items()}
