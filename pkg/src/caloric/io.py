"""CSV grids and canonical JSON output."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def grid_header(n: int) -> list:
    return ["t"] + [f"x{i + 1}" for i in range(n)] + ["value"]


def write_grid_csv(path, t, x, values) -> None:
    """Write ``t,x1..xn,value`` rows with 17 significant digits."""
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(t.size, -1)
    values = np.asarray(values, dtype=float).reshape(-1)
    lines = [",".join(grid_header(x.shape[1]))]
    for row in np.column_stack([t, x, values]):
        lines.append(",".join(format(float(v), ".17g") for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_samples_csv(path):
    """Read a ``t,x1..xn,value`` file into ``(t, x, values)`` arrays."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "t" or header[-1] != "value" or len(header) < 3:
            raise ValueError(f"unexpected sample header {header}")
        rows = np.array([[float(v) for v in row] for row in reader if row])
    n = len(header) - 2
    rows = rows.reshape(-1, n + 2)
    return rows[:, 0].copy(), rows[:, 1:-1].copy(), rows[:, -1].copy()


def to_plain(obj):
    """Recursively convert numpy scalars/arrays to JSON-safe Python values.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def rounded(obj, digits: int = 4):
    """Human-rounded copy of a JSON tree (floats to ``digits`` significant figures)."""
    if isinstance(obj, dict):
        return {k: rounded(v, digits) for k, v in obj.items()}
    if isinstance(obj, list):
        return [rounded(v, digits) for v in obj]
    if isinstance(obj, float):
        return float(format(obj, f".{digits}g"))
    return obj


def dump_json(path, doc) -> None:
    Path(path).write_text(json.dumps(to_plain(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")
