# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; see ``_fallback.py`` for the reference semantics."""

from cython.parallel cimport prange
from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc

import numpy as np

cdef int MAX_SWEEPS = 100


def lu_solve(double[:, ::1] a, double[::1] b, double pivot_tol):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, c, p
    cdef Py_ssize_t failed = -1
    cdef double scale = 0.0, best, tmp, f, threshold, acc
    for i in range(n):
        for j in range(n):
            if fabs(a[i, j]) > scale:
                scale = fabs(a[i, j])
    if scale == 0.0:
        return 0
    threshold = pivot_tol * scale
    with nogil:
        for c in range(n):
            p = c
            best = fabs(a[c, c])
            for i in range(c + 1, n):
                if fabs(a[i, c]) > best:
                    best = fabs(a[i, c])
                    p = i
            if best < threshold or best == 0.0:
                failed = c
                break
            if p != c:
                for j in range(n):
                    tmp = a[c, j]
                    a[c, j] = a[p, j]
                    a[p, j] = tmp
                tmp = b[c]
                b[c] = b[p]
                b[p] = tmp
            for i in range(c + 1, n):
                f = a[i, c] / a[c, c]
                if f != 0.0:
                    for j in range(c + 1, n):
                        a[i, j] -= f * a[c, j]
                    b[i] -= f * b[c]
    if failed >= 0:
        return failed
    with nogil:
        for i in range(n - 1, -1, -1):
            acc = b[i]
            for j in range(i + 1, n):
                acc -= a[i, j] * b[j]
            b[i] = acc / a[i, i]
    return -1


def jacobi_eigenvalues(double[:, ::1] a, double tol):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, r
    cdef int sweep
    cdef double off, apq, theta, t, c, s, x, y
    for sweep in range(MAX_SWEEPS + 1):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += a[p, q] * a[p, q]
        if sqrt(off) <= tol:
            return sweep
        if sweep == MAX_SWEEPS:
            break
        with nogil:
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(n):
                        x = a[r, p]
                        y = a[r, q]
                        a[r, p] = c * x - s * y
                        a[r, q] = s * x + c * y
                    for r in range(n):
                        x = a[p, r]
                        y = a[q, r]
                        a[p, r] = c * x - s * y
                        a[q, r] = s * x + c * y
                    a[p, q] = 0.0
                    a[q, p] = 0.0
    return -1


cdef void _agent_update(
    const double[:, ::1] A,
    const double[:, ::1] Q,
    const long[::1] offsets,
    const double[::1] alphas,
    const double[:, ::1] W,
    const double[:, :, ::1] X,
    const double[:, :, ::1] Y,
    double[:, :, ::1] X_out,
    double[:, :, ::1] Y_out,
    Py_ssize_t i,
    double *T1,
    double *T2,
) noexcept nogil:
    cdef Py_ssize_t m = alphas.shape[0]
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t lo = offsets[i]
    cdef Py_ssize_t ni = offsets[i + 1] - lo
    cdef Py_ssize_t r, c, j, t
    cdef double acc, a_i = alphas[i], w

    # innermost loops run along rows so every access is contiguous

    # T1 = Y_i[rows] - A_r X_i      (ni x n)
    for r in range(ni):
        for c in range(n):
            T1[r * n + c] = Y[i, lo + r, c]
        for t in range(n):
            w = A[lo + r, t]
            for c in range(n):
                T1[r * n + c] -= w * X[i, t, c]
    # T2 = Y_i A_r' - X_i[:, cols] + Q[:, cols]      (n x ni)
    for r in range(n):
        for c in range(ni):
            acc = Q[r, lo + c] - X[i, r, lo + c]
            for t in range(n):
                acc += Y[i, r, t] * A[lo + c, t]
            T2[r * ni + c] = acc

    # consensus part: sum_j w_ij Z_j
    for r in range(n):
        for c in range(n):
            X_out[i, r, c] = 0.0
            Y_out[i, r, c] = 0.0
    for j in range(m):
        w = W[i, j]
        if w == 0.0:
            continue
        for r in range(n):
            for c in range(n):
                X_out[i, r, c] += w * X[j, r, c]
                Y_out[i, r, c] += w * Y[j, r, c]

    # X -= alpha d_X with d_X = -A_r' T1 - T2 scattered into the agent's columns
    for t in range(ni):
        for r in range(n):
            w = a_i * A[lo + t, r]
            for c in range(n):
                X_out[i, r, c] += w * T1[t * n + c]
    for r in range(n):
        for c in range(ni):
            X_out[i, r, lo + c] += a_i * T2[r * ni + c]
    # Y -= alpha d_Y with d_Y = T1 scattered into the agent's rows + T2 A_r
    for r in range(n):
        for t in range(ni):
            w = a_i * T2[r * ni + t]
            for c in range(n):
                Y_out[i, r, c] -= w * A[lo + t, c]
    for t in range(ni):
        for c in range(n):
            Y_out[i, lo + t, c] -= a_i * T1[t * n + c]


def round_step(
    const double[:, ::1] A,
    const double[:, ::1] Q,
    const long[::1] offsets,
    const double[::1] alphas,
    const double[:, ::1] W,
    const double[:, :, ::1] X,
    const double[:, :, ::1] Y,
    double[:, :, ::1] X_out,
    double[:, :, ::1] Y_out,
    int nthreads,
):
    cdef Py_ssize_t m = alphas.shape[0]
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t i, width = 0
    cdef double *T1
    cdef double *T2
    cdef int[::1] failed
    for i in range(m):
        if offsets[i + 1] - offsets[i] > width:
            width = offsets[i + 1] - offsets[i]
    if nthreads < 1:
        nthreads = 1
    if nthreads == 1 or m == 1:
        T1 = <double *> malloc(width * n * sizeof(double))
        T2 = <double *> malloc(width * n * sizeof(double))
        if T1 == NULL or T2 == NULL:
            free(T1)
            free(T2)
            raise MemoryError()
        for i in range(m):
            _agent_update(A, Q, offsets, alphas, W, X, Y, X_out, Y_out, i, T1, T2)
        free(T1)
        free(T2)
        return 0
    status = np.zeros(m, dtype=np.intc)
    failed = status
    for i in prange(m, nogil=True, num_threads=nthreads, schedule="static"):
        T1 = <double *> malloc(width * n * sizeof(double))
        T2 = <double *> malloc(width * n * sizeof(double))
        if T1 == NULL or T2 == NULL:
            failed[i] = 1
        else:
            _agent_update(A, Q, offsets, alphas, W, X, Y, X_out, Y_out, i, T1, T2)
        free(T1)
        free(T2)
    if status.any():
        raise MemoryError()
    return 0
