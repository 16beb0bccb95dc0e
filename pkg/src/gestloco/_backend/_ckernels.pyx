# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ``_pykernels``.

Same signatures and semantics; plain C loops over float64 buffers. Keep the
arithmetic expression structure in ``biquad_run`` identical to the Python
fallback so single-sample and block filtering agree bit-for-bit.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, INFINITY

cnp.import_array()

BACKEND_NAME = "c"


def rbf_gram(x, double gamma):
    """Symmetric RBF Gram matrix K[i, j] = exp(-gamma * ||x_i - x_j||^2)."""
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], d = xv.shape[1]
    out_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(n):
        out[i, i] = 1.0
        for j in range(i + 1, n):
            acc = 0.0
            for t in range(d):
                diff = xv[i, t] - xv[j, t]
                acc += diff * diff
            acc = exp(-gamma * acc)
            out[i, j] = acc
            out[j, i] = acc
    return out_arr


def rbf_cross(queries, refs, double gamma):
    """K[i, j] = exp(-gamma * ||queries_i - refs_j||^2), shape (n_queries, n_refs)."""
    cdef double[:, ::1] q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef double[:, ::1] r = np.ascontiguousarray(refs, dtype=np.float64)
    cdef Py_ssize_t nq = q.shape[0], nr = r.shape[0], d = q.shape[1]
    out_arr = np.empty((nq, nr), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(nq):
        for j in range(nr):
            acc = 0.0
            for t in range(d):
                diff = q[i, t] - r[j, t]
                acc += diff * diff
            out[i, j] = exp(-gamma * acc)
    return out_arr


def smo_solve(k, y, double c_reg, double tol, long max_iter):
    """SMO dual solver on a precomputed kernel matrix; see the Python twin."""
    cdef double[:, ::1] kv = np.ascontiguousarray(k, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    alpha_arr = np.zeros(n, dtype=np.float64)
    grad_arr = np.full(n, -1.0, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] grad = grad_arr

    cdef long it = 0
    cdef double violation = INFINITY
    cdef Py_ssize_t i, j, t
    cdef double best_up, best_low, yg
    cdef double yi, yj, quad, delta, old_ai, old_aj, ai, aj, s, dai, daj

    while it < max_iter:
        i = -1
        j = -1
        best_up = -INFINITY
        best_low = INFINITY
        for t in range(n):
            yg = -yv[t] * grad[t]
            if (yv[t] > 0 and alpha[t] < c_reg) or (yv[t] < 0 and alpha[t] > 0):
                if yg > best_up:
                    best_up = yg
                    i = t
            if (yv[t] > 0 and alpha[t] > 0) or (yv[t] < 0 and alpha[t] < c_reg):
                if yg < best_low:
                    best_low = yg
                    j = t
        if i < 0 or j < 0:
            violation = 0.0
            break
        violation = best_up - best_low
        if violation <= tol:
            break

        yi = yv[i]
        yj = yv[j]
        quad = kv[i, i] + kv[j, j] - 2.0 * kv[i, j]
        if quad <= 0.0:
            quad = 1e-12
        delta = violation / quad

        old_ai = alpha[i]
        old_aj = alpha[j]
        ai = old_ai + yi * delta
        aj = old_aj - yj * delta
        s = yi * old_ai + yj * old_aj
        ai = min(max(ai, 0.0), c_reg)
        aj = yj * (s - yi * ai)
        aj = min(max(aj, 0.0), c_reg)
        ai = yi * (s - yj * aj)
        ai = min(max(ai, 0.0), c_reg)
        alpha[i] = ai
        alpha[j] = aj

        dai = ai - old_ai
        daj = aj - old_aj
        if dai != 0.0:
            for t in range(n):
                grad[t] += (yi * dai) * (yv[t] * kv[i, t])
        if daj != 0.0:
            for t in range(n):
                grad[t] += (yj * daj) * (yv[t] * kv[j, t])
        it += 1

    cdef double bias = _smo_bias(alpha, grad, yv, c_reg, n)
    if violation < 0.0:
        violation = 0.0
    return alpha_arr, bias, violation, it


cdef double _smo_bias(double[::1] alpha, double[::1] grad, double[::1] y,
                      double c_reg, Py_ssize_t n):
    cdef Py_ssize_t t
    cdef double acc = 0.0, yg
    cdef long nfree = 0
    cdef double hi = -INFINITY, lo = INFINITY
    for t in range(n):
        yg = -y[t] * grad[t]
        if alpha[t] > 0.0 and alpha[t] < c_reg:
            acc += yg
            nfree += 1
        if (y[t] > 0 and alpha[t] < c_reg) or (y[t] < 0 and alpha[t] > 0):
            if yg > hi:
                hi = yg
        if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < c_reg):
            if yg < lo:
                lo = yg
    if nfree > 0:
        return acc / nfree
    if hi == -INFINITY:
        hi = 0.0
    if lo == INFINITY:
        lo = 0.0
    return 0.5 * (hi + lo)


def biquad_run(double b0, double b1, double b2, double a1, double a2,
               x, double s1, double s2):
    """Direct form II transposed biquad over a block; returns (y, s1, s2)."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double xi, yi
    for i in range(n):
        xi = xv[i]
        yi = b0 * xi + s1
        s1 = (b1 * xi - a1 * yi) + s2
        s2 = b2 * xi - a2 * yi
        out[i] = yi
    return out_arr, s1, s2
