"""Sentence-level parallelism with order-preserving results.

Workers receive the shared payload (models, params) through fork-time
memory, so nothing heavy is pickled, and results come back in corpus
order; folding them in the parent in that order makes every aggregate
byte-identical whatever the job count.
"""

from __future__ import annotations

import multiprocessing

_FUNC = None
_PAYLOAD = None


def _invoke(item):
    return _FUNC(_PAYLOAD, item)


def map_items(func, payload, items, jobs=1):
    """[func(payload, it) for it in items], optionally across processes.

    ``func`` must be a module-level function. Falls back to sequential
    execution where fork is unavailable.
    """
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [func(payload, it) for it in items]
    global _FUNC, _PAYLOAD
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        return [func(payload, it) for it in items]
    _FUNC, _PAYLOAD = func, payload
    try:
        chunk = max(1, len(items) // (jobs * 4))
        with ctx.Pool(processes=jobs) as pool:
            return pool.map(_invoke, items, chunksize=chunk)
    finally:
        _FUNC = None
        _PAYLOAD = None
