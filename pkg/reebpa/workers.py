# -*- coding: utf-8 -*-
"""
reebpa/workers.py

Worker-count resolution and an order-preserving parallel map.

Flow models close over parsed expressions and numpy callables, so work is
fanned out on threads rather than processes; numpy and scipy release the GIL
inside their kernels.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

logger = logging.getLogger(__name__)

ENV_WORKERS = "REEBPA_WORKERS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(requested: Optional[int] = None) -> int:
    """Option value, then $REEBPA_WORKERS, then the logical core count."""
    if requested is not None:
        n = int(requested)
    elif os.environ.get(ENV_WORKERS, "").strip():
        try:
            n = int(os.environ[ENV_WORKERS])
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", ENV_WORKERS, os.environ[ENV_WORKERS])
            n = os.cpu_count() or 1
    else:
        n = os.cpu_count() or 1
    return max(1, n)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> list[R]:
    """Apply `fn` to every item; results come back in input order.

    The first exception raised by any item propagates to the caller.
    """
    items = list(items)
    n = min(resolve_workers(workers), max(1, len(items)))
    if n == 1:
        return [fn(item) for item in items]
    logger.debug("parallel_map: %d items on %d threads", len(items), n)
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
