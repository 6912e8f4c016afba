# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled phase-sum kernel.

Same contract as the numpy reference (:mod:`eventloc._accel._phase_np`):
out[r, p] = sum_q amps[r, q] * exp(-1j k[q].x[p]).  The scalar loop trades
the fallback's large intermediate phase matrix for per-node sincos calls,
which pays off when the number of right-hand sides is small.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def phase_sum(k, amps, x):
    # const views: callers may pass arrays with the writeable flag cleared
    cdef const double[:, ::1] kv = np.ascontiguousarray(k, dtype=np.float64)
    cdef const double complex[:, ::1] av = np.ascontiguousarray(amps, dtype=np.complex128)
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n_q = kv.shape[0]
    cdef Py_ssize_t d = kv.shape[1]
    cdef Py_ssize_t n_rhs = av.shape[0]
    cdef Py_ssize_t n_x = xv.shape[0]
    if av.shape[1] != n_q:
        raise ValueError("amps and k disagree on node count")
    if xv.shape[1] != d:
        raise ValueError("x and k disagree on dimension")

    out_arr = np.zeros((n_rhs, n_x), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t p, q, r, a
    cdef double ph, cr, si
    cdef double complex e

    for p in range(n_x):
        for q in range(n_q):
            ph = 0.0
            for a in range(d):
                ph += kv[q, a] * xv[p, a]
            cr = cos(ph)
            si = sin(ph)
            e = cr - 1j * si
            for r in range(n_rhs):
                out[r, p] = out[r, p] + av[r, q] * e
    return out_arr
