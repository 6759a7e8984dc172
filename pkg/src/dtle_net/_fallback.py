"""Pure-Python (numpy) versions of the hot kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Both operate in place on float64 C-contiguous arrays supplied by the caller
and report failure through their return value rather than by raising, so the
wrappers in :mod:`dtle_net.matcore` and :mod:`dtle_net.solver` own the error
policy.
"""

import numpy as np

MAX_SWEEPS = 100


def lu_solve(a, b, pivot_tol):
    """Overwrite ``b`` with the solution of ``a x = b``.

    Gaussian elimination with partial pivoting; ``a`` is destroyed. Returns
    -1 on success or the index of the column whose best pivot fell below
    ``pivot_tol`` times the largest entry of the original matrix.
    """
    n = a.shape[0]
    scale = np.max(np.abs(a)) if n else 0.0
    threshold = pivot_tol * scale
    if scale == 0.0:
        return 0
    for c in range(n):
        p = c + int(np.argmax(np.abs(a[c:, c])))
        if abs(a[p, c]) < threshold or a[p, c] == 0.0:
            return c
        if p != c:
            a[[c, p]] = a[[p, c]]
            b[c], b[p] = b[p], b[c]
        f = a[c + 1:, c] / a[c, c]
        a[c + 1:, c + 1:] -= np.outer(f, a[c, c + 1:])
        b[c + 1:] -= f * b[c]
    for r in range(n - 1, -1, -1):
        b[r] = (b[r] - a[r, r + 1:] @ b[r + 1:]) / a[r, r]
    return -1


def jacobi_eigenvalues(a, tol):
    """Cyclic Jacobi on symmetric ``a``; diagonal holds eigenvalues on exit.

    Sweeps until the off-diagonal Frobenius norm is at most ``tol``. Returns
    the number of sweeps used, or -1 if ``MAX_SWEEPS`` was exhausted.
    """
    n = a.shape[0]
    for sweep in range(MAX_SWEEPS + 1):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol:
            return sweep
        if sweep == MAX_SWEEPS:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
    return -1


def round_step(A, Q, offsets, alphas, W, X, Y, X_out, Y_out, nthreads):
    """One synchronous round of the consensus-plus-gradient update.

    ``X`` and ``Y`` are the stacked (m, n, n) estimates at round k; results
    for round k+1 go to ``X_out``/``Y_out``. ``nthreads`` is accepted for
    signature parity with the compiled kernel and ignored.
    """
    m = alphas.shape[0]
    mixed_X = np.tensordot(W, X, axes=1)
    mixed_Y = np.tensordot(W, Y, axes=1)
    for i in range(m):
        lo, hi = offsets[i], offsets[i + 1]
        Ar = A[lo:hi]
        Xi = X[i]
        Yi = Y[i]
        T1 = Yi[lo:hi] - Ar @ Xi
        T2 = Yi @ Ar.T - Xi[:, lo:hi] + Q[:, lo:hi]
        gX = -(Ar.T @ T1)
        gX[:, lo:hi] -= T2
        gY = T2 @ Ar
        gY[lo:hi] += T1
        X_out[i] = mixed_X[i] - alphas[i] * gX
        Y_out[i] = mixed_Y[i] - alphas[i] * gY
    return 0
