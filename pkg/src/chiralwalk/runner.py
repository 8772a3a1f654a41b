"""Order-preserving parallel map for disorder ensembles.

Results are always consumed in task order, so any reduction performed by the
caller sums contributions in a fixed sequence and the outcome is bit-identical
for every worker count.
"""

from __future__ import annotations

import multiprocessing
import os
from collections.abc import Iterable, Iterator

__all__ = ["map_ordered", "resolve_workers"]

WORKERS_ENV_VAR = "CHIRALWALK_WORKERS"


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: explicit argument, else the environment, else 1."""
    if requested is not None:
        value = int(requested)
    else:
        value = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    if value < 1:
        raise ValueError(f"worker count must be >= 1, got {value}")
    return value


def map_ordered(func, tasks: Iterable, n_workers: int = 1, chunksize: int = 4) -> Iterator:
    """Yield func(task) for each task, in task order.

    With one worker this is a plain loop; otherwise a process pool computes
    results and ``imap`` hands them back in submission order.
    """
    tasks = list(tasks)
    if n_workers <= 1 or len(tasks) <= 1:
        for task in tasks:
            yield func(task)
        return
    with multiprocessing.Pool(processes=min(n_workers, len(tasks))) as pool:
        yield from pool.imap(func, tasks, chunksize=chunksize)
