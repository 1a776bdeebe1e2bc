"""Small shared helpers: bounded thread mapping and JSON-safe conversion."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV_VAR = "QEVT_THREADS"


def max_workers() -> int:
    """Worker cap from the QEVT_THREADS environment variable (default 1)."""
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def thread_map(fn, items):
    """Map ``fn`` over ``items``, possibly on a bounded thread pool.

    Results come back in input order regardless of completion order, so
    callers stay deterministic under any worker count.
    """
    items = list(items)
    workers = min(max_workers(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def jsonable(value):
    """Convert numpy scalars/arrays and infinities into JSON-safe values.

    Infinities serialize as the strings "inf"/"-inf" (strict JSON has no
    representation for them)."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset, np.ndarray)):
        seq = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [jsonable(v) for v in seq]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        value = float(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    return value
