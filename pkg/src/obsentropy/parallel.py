"""Deterministic data-parallel helper.

Work is split into fixed chunks that do not depend on the worker count, each
chunk is computed by the same pure function, and results are combined in
chunk order — so outputs are bit-identical for any number of workers.
Workers are forked processes; the read-only payload is shared copy-on-write.
"""

from __future__ import annotations

import multiprocessing
import os

ENV_WORKERS = "OBSENTROPY_WORKERS"

# payload handed to forked workers without pickling
_PAYLOAD = None


def resolve_workers(workers: int | None = None) -> int:
    """Explicit argument, else the OBSENTROPY_WORKERS env var, else 1."""
    if workers is None:
        env = os.environ.get(ENV_WORKERS, "")
        workers = int(env) if env.strip() else 1
    return max(1, int(workers))


def _call(args):
    fn, item = args
    return fn(item, _PAYLOAD)


def parallel_map(fn, items, workers: int | None = None, payload=None) -> list:
    """Map ``fn(item, payload)`` over items, preserving item order.

    ``fn`` must be a module-level function (fork + pickle of the callable).
    """
    global _PAYLOAD
    items = list(items)
    w = resolve_workers(workers)
    if w <= 1 or len(items) <= 1:
        return [fn(item, payload) for item in items]
    _PAYLOAD = payload
    try:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=min(w, len(items))) as pool:
            return pool.map(_call, [(fn, item) for item in items], chunksize=1)
    finally:
        _PAYLOAD = None
