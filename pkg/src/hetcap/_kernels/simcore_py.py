"""Pure-Python processor-sharing event loop.

Reference implementation of the hot kernel; the Cython twin in _simcore.pyx
mirrors it operation for operation so both produce bit-identical results.
Keep the two files in sync.

The queue is tracked on a service-progress clock that advances at
capacity/n seconds of per-job service per wall second while n jobs are
present.  A job arriving when the clock reads A departs when the clock
reaches A + work, so the next departure is always the smallest such
threshold: a binary heap keyed by (threshold, arrival index) yields an
O((n) log n) exact simulation with no per-slot stepping.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _heap_push(thr: list, idx: list, t: float, i: int) -> None:
    thr.append(t)
    idx.append(i)
    child = len(thr) - 1
    while child > 0:
        parent = (child - 1) >> 1
        if (thr[child], idx[child]) < (thr[parent], idx[parent]):
            thr[child], thr[parent] = thr[parent], thr[child]
            idx[child], idx[parent] = idx[parent], idx[child]
            child = parent
        else:
            break


def _heap_pop(thr: list, idx: list) -> tuple[float, int]:
    top_t, top_i = thr[0], idx[0]
    last_t, last_i = thr.pop(), idx.pop()
    n = len(thr)
    if n > 0:
        thr[0], idx[0] = last_t, last_i
        pos = 0
        while True:
            left = 2 * pos + 1
            right = left + 1
            smallest = pos
            if left < n and (thr[left], idx[left]) < (thr[smallest], idx[smallest]):
                smallest = left
            if right < n and (thr[right], idx[right]) < (thr[smallest], idx[smallest]):
                smallest = right
            if smallest == pos:
                break
            thr[pos], thr[smallest] = thr[smallest], thr[pos]
            idx[pos], idx[smallest] = idx[smallest], idx[pos]
            pos = smallest
    return top_t, top_i


def ps_departures(
    arrivals: np.ndarray, works: np.ndarray, capacity: float
) -> np.ndarray:
    """Departure times of a processor-sharing queue, drained to empty.

    arrivals: sorted wall-clock arrival times; works: per-job service demand
    in server-seconds; capacity: server-seconds delivered per wall second,
    split equally over jobs in the queue.  Callers censor at their horizon.
    """
    arrivals = np.ascontiguousarray(arrivals, dtype=np.float64)
    works = np.ascontiguousarray(works, dtype=np.float64)
    n = len(arrivals)
    if len(works) != n:
        raise ValueError("arrivals and works must have equal length")
    dep = np.empty(n, dtype=np.float64)
    if n == 0:
        return dep
    if capacity <= 0.0:
        dep.fill(np.inf)
        return dep

    heap_thr: list[float] = []
    heap_idx: list[int] = []
    progress = 0.0
    t = 0.0
    i = 0
    m = 0
    while i < n or m > 0:
        if m > 0:
            t_dep = t + (heap_thr[0] - progress) * m / capacity
        else:
            t_dep = np.inf
        if i < n and arrivals[i] <= t_dep:
            if m > 0:
                progress += (arrivals[i] - t) * capacity / m
            else:
                progress = 0.0  # reset the clock on every idle period
            if arrivals[i] < t:
                raise RuntimeError("arrival times must be non-decreasing")
            t = arrivals[i]
            _heap_push(heap_thr, heap_idx, progress + works[i], i)
            m += 1
            i += 1
        else:
            progress = heap_thr[0]
            if t_dep < t:
                raise RuntimeError("simulation clock went backwards")
            t = t_dep
            _, j = _heap_pop(heap_thr, heap_idx)
            dep[j] = t
            m -= 1
    return dep
