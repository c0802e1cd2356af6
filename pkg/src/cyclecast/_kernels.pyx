# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: fused Adam update and row softmax.

Numerics must match the numpy fallbacks in backend.py exactly in exact
arithmetic; both use the same operation order per element.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


def adam_update(double[::1] param, double[::1] grad,
                double[::1] m, double[::1] v,
                long t, double lr, double beta1, double beta2, double eps):
    """Single-pass bias-corrected Adam update, in place."""
    cdef Py_ssize_t i, n = param.shape[0]
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double g, m_hat, v_hat
    for i in range(n):
        g = grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        m_hat = m[i] / c1
        v_hat = v[i] / c2
        param[i] -= lr * m_hat / (sqrt(v_hat) + eps)


def softmax_lastaxis(double[:, ::1] x, double[:, ::1] out):
    """Row-wise stable softmax on a 2-d contiguous array."""
    cdef Py_ssize_t i, j, rows = x.shape[0], cols = x.shape[1]
    cdef double hi, total
    for i in range(rows):
        hi = x[i, 0]
        for j in range(1, cols):
            if x[i, j] > hi:
                hi = x[i, j]
        total = 0.0
        for j in range(cols):
            out[i, j] = exp(x[i, j] - hi)
            total += out[i, j]
        for j in range(cols):
            out[i, j] /= total
