"""Small shared helpers."""

from __future__ import annotations

import os

FLOAT_FMT = "%.9g"


def worker_count(default=None):
    """Worker count for parallel maps; MVMATERN_THREADS overrides."""
    env = os.environ.get("MVMATERN_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"MVMATERN_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ValueError("MVMATERN_THREADS must be >= 1")
        return n
    if default is not None:
        return default
    return min(8, os.cpu_count() or 1)


def fmt_float(v):
    return FLOAT_FMT % float(v)
