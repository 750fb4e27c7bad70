"""Worker-count configuration shared by the multi-start routines."""
from __future__ import annotations

import os

THREADS_ENV = "TESH_THREADS"


def thread_count() -> int:
    """Worker threads from ``TESH_THREADS``, defaulting to the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return k
