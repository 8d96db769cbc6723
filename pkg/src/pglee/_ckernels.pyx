# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels.

The arithmetic (sequential accumulation of squared coordinate
differences) intentionally matches the pure-Python fallback so both
backends produce bitwise-identical results.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def pairwise_sqdist(cnp.ndarray[cnp.float64_t, ndim=2] points,
                    cnp.ndarray[cnp.float64_t, ndim=2] centers):
    """Squared Euclidean distances, shape (n_points, n_centers)."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t m = centers.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, m))
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(d):
                diff = points[i, t] - centers[j, t]
                acc += diff * diff
            out[i, j] = acc
    return out


def nearest_center(cnp.ndarray[cnp.float64_t, ndim=2] points,
                   cnp.ndarray[cnp.float64_t, ndim=2] centers):
    """Index of the closest center per point; ties go to the lowest index."""
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t m = centers.shape[0]
    cdef Py_ssize_t d = points.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i, j, t, best
    cdef double acc, diff, best_d
    for i in range(n):
        best = 0
        best_d = -1.0
        for j in range(m):
            acc = 0.0
            for t in range(d):
                diff = points[i, t] - centers[j, t]
                acc += diff * diff
            if best_d < 0.0 or acc < best_d:
                best_d = acc
                best = j
        out[i] = best
    return out
