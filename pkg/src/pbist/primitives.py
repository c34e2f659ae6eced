"""Fork-join scheduling and bulk-array primitives.

Everything here is deterministic: the result of every primitive is a pure
function of its inputs, whatever the worker count. Work is cut into blocks
that write disjoint output ranges; blocks run on a shared thread pool and
the heavy inner loops are numba kernels compiled with ``nogil=True`` so the
threads can overlap.

Sorted arrays are strictly increasing ``int64`` arrays.
"""

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

import numpy as np
from numba import njit

__all__ = [
    "DEFAULT_GRAIN",
    "set_num_workers",
    "get_num_workers",
    "num_workers",
    "parallel_blocks",
    "parallel_for",
    "scan_exclusive",
    "pack",
    "filter",
    "merge",
    "difference",
    "elem_rank",
    "rank",
]

DEFAULT_GRAIN = 2048

# Upper bound on blocks per worker; keeps task overhead bounded for huge ranges.
_BLOCKS_PER_WORKER = 8


class _Scheduler:
    def __init__(self):
        self.workers = os.cpu_count() or 1
        self._pool = None
        self._pool_size = 0
        self._lock = threading.Lock()

    def pool(self):
        with self._lock:
            if self._pool is None or self._pool_size != self.workers:
                if self._pool is not None:
                    self._pool.shutdown(wait=True)
                self._pool = ThreadPoolExecutor(
                    max_workers=self.workers, thread_name_prefix="pbist")
                self._pool_size = self.workers
            return self._pool


_scheduler = _Scheduler()
_local = threading.local()


def set_num_workers(n):
    """Set the number of worker threads used by all parallel primitives."""
    n = int(n)
    if n < 1:
        raise ValueError(f"worker count must be >= 1, got {n}")
    _scheduler.workers = n


def get_num_workers():
    return _scheduler.workers


@contextmanager
def num_workers(n):
    """Temporarily run with ``n`` workers."""
    old = get_num_workers()
    set_num_workers(n)
    try:
        yield
    finally:
        set_num_workers(old)


def _block_bounds(lo, hi, grain, workers):
    n = hi - lo
    if n <= 0:
        return []
    if workers == 1 or n <= grain:
        return [(lo, hi)]
    nblocks = min(-(-n // grain), workers * _BLOCKS_PER_WORKER)
    step = -(-n // nblocks)
    return [(s, min(s + step, hi)) for s in range(lo, hi, step)]


def _run_marked(fn, lo, hi):
    _local.in_worker = True
    try:
        return fn(lo, hi)
    finally:
        _local.in_worker = False


def _bounds(lo, hi, grain):
    grain = DEFAULT_GRAIN if grain is None else max(1, int(grain))
    workers = 1 if getattr(_local, "in_worker", False) else get_num_workers()
    return _block_bounds(lo, hi, grain, workers)


def _run_blocks(bounds, fn):
    if len(bounds) <= 1:
        return [fn(b_lo, b_hi) for b_lo, b_hi in bounds]
    pool = _scheduler.pool()
    futures = [pool.submit(_run_marked, fn, b_lo, b_hi) for b_lo, b_hi in bounds]
    return [f.result() for f in futures]


def parallel_blocks(lo, hi, fn, grain=None):
    """Call ``fn(block_lo, block_hi)`` over a partition of ``[lo, hi)``.

    Blocks are independent and must write disjoint locations. Returns the
    list of per-block results in block order. Calls made from inside a
    worker run inline, so nesting never deadlocks the pool.
    """
    return _run_blocks(_bounds(lo, hi, grain), fn)


def parallel_for(lo, hi, body, grain=None):
    """Run ``body(i)`` exactly once for every ``i`` in ``[lo, hi)``."""
    def run(b_lo, b_hi):
        for i in range(b_lo, b_hi):
            body(i)

    parallel_blocks(lo, hi, run, grain)


def _as_keys(arr):
    return np.ascontiguousarray(arr, dtype=np.int64)


def scan_exclusive(arr, grain=None):
    """Exclusive prefix sums: ``out[0] = 0`` and ``out[i] = sum(arr[:i])``."""
    arr = np.ascontiguousarray(arr, dtype=np.int64)
    n = len(arr)
    out = np.empty(n, dtype=np.int64)
    if n == 0:
        return out
    bounds = _bounds(0, n, grain)
    sums = _run_blocks(bounds, lambda lo, hi: int(arr[lo:hi].sum()))
    starts = {}
    acc = 0
    for (lo, _), s in zip(bounds, sums):
        starts[lo] = acc
        acc += s

    def fill(lo, hi):
        block = np.cumsum(arr[lo:hi])
        out[lo] = starts[lo]
        out[lo + 1:hi] = starts[lo] + block[:-1]

    _run_blocks(bounds, fill)
    return out


def pack(arr, flags, grain=None):
    """Stable subsequence of ``arr`` at the positions where ``flags`` is true."""
    arr = np.asarray(arr)
    flags = np.asarray(flags, dtype=bool)
    if len(arr) != len(flags):
        raise ValueError("arr and flags must have the same length")
    n = len(arr)
    bounds = _bounds(0, n, grain)
    counts = _run_blocks(bounds, lambda lo, hi: int(np.count_nonzero(flags[lo:hi])))
    offsets = {}
    acc = 0
    for (lo, _), c in zip(bounds, counts):
        offsets[lo] = acc
        acc += c
    out = np.empty(acc, dtype=arr.dtype)

    def scatter(lo, hi):
        chunk = arr[lo:hi][flags[lo:hi]]
        out[offsets[lo]:offsets[lo] + len(chunk)] = chunk

    _run_blocks(bounds, scatter)
    return out


def filter(arr, pred, grain=None):
    """Elements of ``arr`` satisfying ``pred``, in their original order.

    ``pred`` is applied to contiguous numpy slices and must act elementwise,
    returning a boolean array of the same length (``lambda x: x % 2 == 0``).
    """
    arr = _as_keys(arr)
    flags = np.empty(len(arr), dtype=bool)

    def mark(lo, hi):
        flags[lo:hi] = np.asarray(pred(arr[lo:hi]), dtype=bool)

    parallel_blocks(0, len(arr), mark, grain)
    return pack(arr, flags, grain)


@njit(cache=True, nogil=True)
def _merge_tasks(a, b, out, tasks, t0, t1):
    for t in range(t0, t1):
        i, ie, j, je, o = tasks[t, 0], tasks[t, 1], tasks[t, 2], tasks[t, 3], tasks[t, 4]
        while i < ie and j < je:
            if b[j] < a[i]:
                out[o] = b[j]
                j += 1
            else:
                out[o] = a[i]
                i += 1
            o += 1
        while i < ie:
            out[o] = a[i]
            i += 1
            o += 1
        while j < je:
            out[o] = b[j]
            j += 1
            o += 1


@njit(cache=True, nogil=True)
def _rank_tasks(a, b, out, tasks, t0, t1):
    for t in range(t0, t1):
        i, ie, j, je = tasks[t, 0], tasks[t, 1], tasks[t, 2], tasks[t, 3]
        for q in range(j, je):
            x = b[q]
            while i < ie and a[i] <= x:
                i += 1
            out[q] = i


def _merge_plan(a, b, grain):
    # Split the larger side at its midpoint, locate the split key in the
    # other side, recurse on both halves. A grain of at least 2 guarantees
    # the larger side has two elements, so both halves shrink.
    grain = max(grain, 2)
    tasks = []
    stack = [(0, len(a), 0, len(b), 0)]
    while stack:
        alo, ahi, blo, bhi, olo = stack.pop()
        na, nb = ahi - alo, bhi - blo
        if na + nb <= grain:
            if na + nb:
                tasks.append((alo, ahi, blo, bhi, olo))
            continue
        if na >= nb:
            amid = (alo + ahi) // 2
            bsplit = blo + int(np.searchsorted(b[blo:bhi], a[amid], side="left"))
            stack.append((amid, ahi, bsplit, bhi, olo + (amid - alo) + (bsplit - blo)))
            stack.append((alo, amid, blo, bsplit, olo))
        else:
            bmid = (blo + bhi) // 2
            asplit = alo + int(np.searchsorted(a[alo:ahi], b[bmid], side="right"))
            stack.append((asplit, ahi, bmid, bhi, olo + (asplit - alo) + (bmid - blo)))
            stack.append((alo, asplit, blo, bmid, olo))
    return np.array(tasks, dtype=np.int64).reshape(-1, 5)


def _rank_plan(a, b, grain):
    # Invariant per task: every a[< alo] <= b[j] and every a[>= ahi] > b[j].
    grain = max(grain, 2)
    tasks = []
    stack = [(0, len(a), 0, len(b))]
    while stack:
        alo, ahi, blo, bhi = stack.pop()
        na, nb = ahi - alo, bhi - blo
        if nb == 0:
            continue
        if na + nb <= grain:
            tasks.append((alo, ahi, blo, bhi))
            continue
        if na >= nb:
            amid = (alo + ahi) // 2
            bsplit = blo + int(np.searchsorted(b[blo:bhi], a[amid], side="left"))
            stack.append((amid, ahi, bsplit, bhi))
            stack.append((alo, amid, blo, bsplit))
        else:
            bmid = (blo + bhi) // 2
            asplit = alo + int(np.searchsorted(a[alo:ahi], b[bmid], side="right"))
            stack.append((asplit, ahi, bmid, bhi))
            stack.append((alo, asplit, blo, bmid))
    return np.array(tasks, dtype=np.int64).reshape(-1, 4)


def merge(a, b, grain=None):
    """Merge two sorted arrays into one sorted array."""
    a, b = _as_keys(a), _as_keys(b)
    grain = DEFAULT_GRAIN if grain is None else grain
    out = np.empty(len(a) + len(b), dtype=np.int64)
    tasks = _merge_plan(a, b, grain)
    parallel_blocks(0, len(tasks),
                    lambda lo, hi: _merge_tasks(a, b, out, tasks, lo, hi), 1)
    return out


def rank(a, b, grain=None):
    """``out[i] = elem_rank(a, b[i])`` for sorted ``a`` and ``b``."""
    a, b = _as_keys(a), _as_keys(b)
    grain = DEFAULT_GRAIN if grain is None else grain
    out = np.empty(len(b), dtype=np.int64)
    tasks = _rank_plan(a, b, grain)
    parallel_blocks(0, len(tasks),
                    lambda lo, hi: _rank_tasks(a, b, out, tasks, lo, hi), 1)
    return out


def elem_rank(a, x):
    """Number of elements of sorted ``a`` that are ``<= x``."""
    return int(np.searchsorted(a, x, side="right"))


def difference(a, b, grain=None):
    """Elements of sorted ``a`` that do not occur in sorted ``b``."""
    a, b = _as_keys(a), _as_keys(b)
    if len(b) == 0 or len(a) == 0:
        return a.copy()
    r = rank(b, a, grain)
    keep = np.empty(len(a), dtype=bool)

    def mark(lo, hi):
        rr = r[lo:hi]
        hit = rr > 0
        hit[hit] = b[rr[hit] - 1] == a[lo:hi][hit]
        keep[lo:hi] = ~hit

    parallel_blocks(0, len(a), mark, grain)
    return pack(a, keep, grain)
