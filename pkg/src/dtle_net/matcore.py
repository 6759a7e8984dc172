"""Dense real-matrix kernel.

Matrices and vectors are plain float64 numpy arrays. The constructors
:func:`as_mat` and :func:`as_vec` are the only gate and refuse non-finite
entries. Vectorization is *row-major*: ``vec_row`` lists row 1, then row 2,
and so on, so the Kronecker identity reads

    vec_row(A @ M @ C) == kron(A, C.T) @ vec_row(M)
"""

from __future__ import annotations

import io

import numpy as np

from . import _backend
from .errors import DimensionError, NonFiniteError, NotSymmetricError, SingularMatrixError

PIVOT_TOL = 1e-12
SYM_TOL = 1e-8
JACOBI_TOL = 1e-12


def as_mat(M, name="matrix") -> np.ndarray:
    a = np.array(M, dtype=float, copy=True)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return a


def as_vec(v, name="vector") -> np.ndarray:
    a = np.array(v, dtype=float, copy=True).reshape(-1)
    if a.size == 0:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return a


def frobenius_norm(M) -> float:
    M = np.asarray(M, dtype=float)
    return float(np.sqrt(np.sum(M * M)))


def frobenius_inner(B1, B2) -> float:
    B1 = np.asarray(B1, dtype=float)
    B2 = np.asarray(B2, dtype=float)
    if B1.shape != B2.shape:
        raise DimensionError(f"shape mismatch {B1.shape} vs {B2.shape}")
    return float(np.sum(B1 * B2))


def vec_row(M) -> np.ndarray:
    """Stack the rows of ``M`` into one vector."""
    return np.ascontiguousarray(M, dtype=float).reshape(-1).copy()


def unvec_row(v, rows, cols) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(rows, cols).copy()


def kron(A, B) -> np.ndarray:
    """Kronecker product; block (i, j) of the result is ``A[i, j] * B``."""
    return np.kron(np.asarray(A, dtype=float), np.asarray(B, dtype=float))


def solve_linear(M, b) -> np.ndarray:
    """Solve ``M x = b`` by LU with partial pivoting.

    Raises
    ------
    SingularMatrixError
        If some pivot falls below ``1e-12`` times the largest entry of ``M``.
    """
    a = np.ascontiguousarray(as_mat(M, "M"))
    x = np.ascontiguousarray(as_vec(b, "b"))
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionError(f"M must be square, got {a.shape}")
    if x.shape[0] != n:
        raise DimensionError(f"b has length {x.shape[0]}, expected {n}")
    failed = _backend.kernels.lu_solve(a, x, PIVOT_TOL)
    if failed >= 0:
        raise SingularMatrixError(
            f"matrix is numerically singular (pivot search failed at column {failed})",
            column=failed,
            pivot=float(abs(a[failed, failed])) if n else 0.0,
        )
    return x


def symmetrize(S) -> np.ndarray:
    """Return ``(S + S')/2`` after checking ``S`` is symmetric to tolerance."""
    S = as_mat(S, "S")
    if S.shape[0] != S.shape[1]:
        raise DimensionError(f"S must be square, got {S.shape}")
    gap = frobenius_norm(S - S.T)
    if gap > SYM_TOL * (1.0 + frobenius_norm(S)):
        raise NotSymmetricError(f"asymmetry {gap:.3e} exceeds tolerance")
    return 0.5 * (S + S.T)


def sym_eigenvalues(S) -> np.ndarray:
    """Eigenvalues of a symmetric matrix in nondecreasing order (cyclic Jacobi)."""
    a = np.ascontiguousarray(symmetrize(S))
    tol = JACOBI_TOL * frobenius_norm(a)
    sweeps = _backend.kernels.jacobi_eigenvalues(a, tol)
    if sweeps < 0:
        raise ArithmeticError("Jacobi iteration did not converge")
    return np.sort(np.diag(a).copy())


def format_matrix(M) -> str:
    """Whitespace-separated rows with 17 significant digits (round-trips)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "".join(" ".join(f"{x:.17g}" for x in row) + "\n" for row in M)


def parse_matrix(text, name="matrix") -> np.ndarray:
    rows = []
    for lineno, line in enumerate(io.StringIO(text), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in line.split()])
        except ValueError as exc:
            raise DimensionError(f"{name}: line {lineno}: {exc}") from None
    if not rows:
        raise DimensionError(f"{name}: no rows")
    width = len(rows[0])
    for r in rows:
        if len(r) != width:
            raise DimensionError(f"{name}: ragged rows ({len(r)} vs {width} entries)")
    return as_mat(rows, name)


def write_matrix(path, M) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_matrix(M))


def read_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return parse_matrix(fh.read(), name=str(path))
