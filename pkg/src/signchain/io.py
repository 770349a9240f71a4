"""Serialization and scheduling helpers for the command line tools.

JSON output is byte-stable: keys sorted, compact separators, no
timestamps unless explicitly stamped, numpy types reduced to plain
Python. The worker pool honors SIGNCHAIN_WORKERS but never changes
results: all randomness is counter-addressed, items are mapped in
order, and the reduction is order-preserving.
"""

from __future__ import annotations

import dataclasses
import json
import os

import numpy as np

__all__ = ["to_jsonable", "dump_json", "rows_to_csv", "worker_count",
           "worker_map"]


def to_jsonable(obj):
    """Reduce dataclasses, numpy values, and containers to JSON types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_json(doc):
    """Canonical JSON text: sorted keys, compact, newline-terminated."""
    return json.dumps(to_jsonable(doc), sort_keys=True,
                      separators=(",", ":")) + "\n"


def rows_to_csv(rows):
    """CSV text for a list of flat dicts; columns follow the first row."""
    if not rows:
        return "\n"
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for row in rows:
        cells = []
        for c in cols:
            v = to_jsonable(row.get(c))
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def worker_count():
    """Requested parallelism; results never depend on it."""
    raw = os.environ.get("SIGNCHAIN_WORKERS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError("SIGNCHAIN_WORKERS: integer >= 1 required")
    if n < 1:
        raise ValueError("SIGNCHAIN_WORKERS: integer >= 1 required")
    return n


def worker_map(fn, items):
    """Order-preserving map, optionally across a process pool.

    Each item must determine its result completely (counter-based
    noise does), so the output is identical for any worker count. Falls
    back to serial execution when a pool cannot be created.
    """
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    try:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(min(n, len(items))) as pool:
            return pool.map(fn, items)
    except (ImportError, OSError):
        return [fn(it) for it in items]
