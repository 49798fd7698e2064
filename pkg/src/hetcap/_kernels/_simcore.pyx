# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled processor-sharing event loop.

Operation-for-operation mirror of simcore_py.ps_departures; both paths must
produce bit-identical departure times.  Keep the two files in sync.
"""

import numpy as np

BACKEND = "compiled"


cdef inline bint _less(double ta, long ia, double tb, long ib) nogil:
    if ta != tb:
        return ta < tb
    return ia < ib


cdef void _heap_push(double[::1] thr, long[::1] idx, long* size,
                     double t, long i) nogil:
    cdef long child = size[0]
    cdef long parent
    cdef double tmp_t
    cdef long tmp_i
    thr[child] = t
    idx[child] = i
    size[0] = child + 1
    while child > 0:
        parent = (child - 1) >> 1
        if _less(thr[child], idx[child], thr[parent], idx[parent]):
            tmp_t = thr[child]; thr[child] = thr[parent]; thr[parent] = tmp_t
            tmp_i = idx[child]; idx[child] = idx[parent]; idx[parent] = tmp_i
            child = parent
        else:
            break


cdef long _heap_pop(double[::1] thr, long[::1] idx, long* size) nogil:
    cdef long top_i = idx[0]
    cdef long n = size[0] - 1
    cdef long pos = 0
    cdef long left, right, smallest
    cdef double tmp_t
    cdef long tmp_i
    size[0] = n
    if n > 0:
        thr[0] = thr[n]
        idx[0] = idx[n]
        while True:
            left = 2 * pos + 1
            right = left + 1
            smallest = pos
            if left < n and _less(thr[left], idx[left], thr[smallest], idx[smallest]):
                smallest = left
            if right < n and _less(thr[right], idx[right], thr[smallest], idx[smallest]):
                smallest = right
            if smallest == pos:
                break
            tmp_t = thr[pos]; thr[pos] = thr[smallest]; thr[smallest] = tmp_t
            tmp_i = idx[pos]; idx[pos] = idx[smallest]; idx[smallest] = tmp_i
            pos = smallest
    return top_i


def ps_departures(arrivals, works, double capacity):
    """Departure times of a processor-sharing queue, drained to empty.

    Same contract as the pure-Python twin: arrivals sorted, works in
    server-seconds, capacity split equally over jobs in the queue.
    """
    arrivals = np.ascontiguousarray(arrivals, dtype=np.float64)
    works = np.ascontiguousarray(works, dtype=np.float64)
    cdef Py_ssize_t n = len(arrivals)
    if len(works) != n:
        raise ValueError("arrivals and works must have equal length")
    dep_arr = np.empty(n, dtype=np.float64)
    if n == 0:
        return dep_arr
    if capacity <= 0.0:
        dep_arr.fill(np.inf)
        return dep_arr

    cdef double[::1] arr = arrivals
    cdef double[::1] wrk = works
    cdef double[::1] dep = dep_arr
    heap_thr_arr = np.empty(n, dtype=np.float64)
    heap_idx_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] heap_thr = heap_thr_arr
    cdef long[::1] heap_idx = heap_idx_arr

    cdef long m = 0
    cdef long i = 0
    cdef long j
    cdef double progress = 0.0
    cdef double t = 0.0
    cdef double t_dep
    cdef double inf = np.inf
    cdef int clock_error = 0

    with nogil:
        while i < n or m > 0:
            if m > 0:
                t_dep = t + (heap_thr[0] - progress) * m / capacity
            else:
                t_dep = inf
            if i < n and arr[i] <= t_dep:
                if m > 0:
                    progress += (arr[i] - t) * capacity / m
                else:
                    progress = 0.0  # reset the clock on every idle period
                if arr[i] < t:
                    clock_error = 1
                    break
                t = arr[i]
                _heap_push(heap_thr, heap_idx, &m, progress + wrk[i], i)
                i += 1
            else:
                progress = heap_thr[0]
                if t_dep < t:
                    clock_error = 2
                    break
                t = t_dep
                j = _heap_pop(heap_thr, heap_idx, &m)
                dep[j] = t
    if clock_error == 1:
        raise RuntimeError("arrival times must be non-decreasing")
    if clock_error == 2:
        raise RuntimeError("simulation clock went backwards")
    return dep_arr
