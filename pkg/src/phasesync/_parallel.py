import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "PHASESYNC_THREADS"


def n_threads():
    """Worker cap from ``PHASESYNC_THREADS`` (default: CPU count)."""
    raw = os.environ.get(ENV_THREADS)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, items):
    """``list(map(fn, items))``, threaded when more than one worker is allowed.

    Results come back in input order, so reductions over them are
    independent of scheduling.
    """
    items = list(items)
    workers = min(n_threads(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
