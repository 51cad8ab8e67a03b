"""Worker-count resolution and order-preserving parallel map.

Bootstrap replicates are embarrassingly parallel; the heavy kernels release
the GIL, so plain threads scale.  Results are always reduced in replicate
order, which keeps every output independent of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

CORES_ENV = "MODELSCOPE_CORES"


def resolve_cores(cores=None) -> int:
    """Worker count: ``MODELSCOPE_CORES`` env, else the argument, else all-but-one."""
    env = os.environ.get(CORES_ENV)
    if env is not None:
        return max(1, int(env))
    if cores is not None:
        return max(1, int(cores))
    return max(1, (os.cpu_count() or 2) - 1)


def ordered_map(fn, count: int, cores: int):
    """Apply ``fn`` to ``range(count)``, returning results in index order."""
    if cores <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(cores, count)) as pool:
        return list(pool.map(fn, range(count)))
