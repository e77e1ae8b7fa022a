# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR and thresholding kernels.

Mirrors the contract of spdfp._kernels._numpy; one of the two modules is
selected at import time by spdfp._kernels.
"""

from libc.math cimport fabs


def csr_matvec_range(const long[::1] indptr, const long[::1] indices,
                     const double[::1] data, const double[::1] x,
                     double[::1] out, Py_ssize_t row_start, Py_ssize_t row_stop):
    """out[i] = (row row_start+i of the matrix) . x, for i < row_stop-row_start."""
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(row_start, row_stop):
        acc = 0.0
        for j in range(indptr[i], indptr[i + 1]):
            acc += data[j] * x[indices[j]]
        out[i - row_start] = acc


def csr_rmatvec_range(const long[::1] indptr, const long[::1] indices,
                      const double[::1] data, const double[::1] y,
                      double[::1] out, Py_ssize_t row_start, Py_ssize_t row_stop):
    """out += sum_i y[i - row_start] * (row i), out pre-zeroed by the caller's wrapper."""
    cdef Py_ssize_t i, j
    cdef double yi
    out[:] = 0.0
    for i in range(row_start, row_stop):
        yi = y[i - row_start]
        if yi != 0.0:
            for j in range(indptr[i], indptr[i + 1]):
                out[indices[j]] += data[j] * yi


def soft_threshold(const double[::1] y, double t, double[::1] out):
    """out = sign(y) * max(|y| - t, 0), componentwise."""
    cdef Py_ssize_t i
    cdef double a
    for i in range(y.shape[0]):
        a = fabs(y[i]) - t
        if a <= 0.0:
            out[i] = 0.0
        elif y[i] > 0.0:
            out[i] = a
        else:
            out[i] = -a
