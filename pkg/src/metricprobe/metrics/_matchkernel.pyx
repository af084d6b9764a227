# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled greedy matching kernel.

Same contract as ``_match_py.greedy_match``; this is the hot inner loop
of every attack search, evaluated once per candidate perturbation.
"""

import numpy as np

cimport numpy as cnp


cdef inline double _sim(Py_ssize_t i, Py_ssize_t j,
                        long[:] rows_a, long[:] rows_b,
                        long[:] ids_a, long[:] ids_b,
                        double[:, :] vectors) nogil:
    cdef long ra = rows_a[i]
    cdef long rb = rows_b[j]
    cdef double dot = 0.0
    cdef Py_ssize_t k
    if ra < 0 or rb < 0:
        return 1.0 if ids_a[i] == ids_b[j] else 0.0
    for k in range(vectors.shape[1]):
        dot += vectors[ra, k] * vectors[rb, k]
    if dot < 0.0:
        return 0.0
    if dot > 1.0:
        return 1.0
    return dot


def greedy_match(long[:] hyp_rows, long[:] ref_rows,
                 long[:] hyp_ids, long[:] ref_ids,
                 double[:, :] vectors):
    """Return (precision, recall) of greedy max-similarity matching."""
    cdef Py_ssize_t n_h = hyp_rows.shape[0]
    cdef Py_ssize_t n_r = ref_rows.shape[0]
    cdef Py_ssize_t i, j
    cdef double best, s
    cdef double p_sum = 0.0
    cdef double r_sum = 0.0
    with nogil:
        for i in range(n_h):
            best = 0.0
            for j in range(n_r):
                s = _sim(i, j, hyp_rows, ref_rows, hyp_ids, ref_ids, vectors)
                if s > best:
                    best = s
            p_sum += best
        for j in range(n_r):
            best = 0.0
            for i in range(n_h):
                s = _sim(i, j, hyp_rows, ref_rows, hyp_ids, ref_ids, vectors)
                if s > best:
                    best = s
            r_sum += best
    return p_sum / n_h, r_sum / n_r
