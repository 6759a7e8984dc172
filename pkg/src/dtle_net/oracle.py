"""Centralized ground truth.

:func:`solve_centralized` vectorizes the equation row-major,

    (kron(A, A) - I) vec_row(X) = -vec_row(Q),

and solves the dense ``n^2 x n^2`` system. :func:`build_quadratic` writes
each agent's objective as an explicit quadratic form about a solution,
``f_i = 1/2 z' P_i z`` with ``z = vec_row([Y - Y*; X - X*])``. This gives a
representation of ``f_i`` independent of the one the solver uses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from . import _rng, matcore
from .errors import DimensionError, InvalidReferenceError, NoUniqueSolutionError, SingularMatrixError
from .problem import AgentEstimate, DTLEProblem, LocalData, local_objective

MAX_N = 50
RESIDUAL_TOL = 1e-8
QUADRATIC_TOL = 1e-8
# f at the reference itself is rounding noise (~1e-30); do not divide by it
VALUE_FLOOR = 1e-14


@dataclass(frozen=True, eq=False)
class CentralizedSolution:
    X_star: np.ndarray
    residual: float
    unique: bool = True


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    P: np.ndarray


@dataclass(frozen=True)
class QuadraticCheck:
    max_relative_deviation: float
    samples: int

    @property
    def passed(self) -> bool:
        return self.max_relative_deviation <= QUADRATIC_TOL


def solve_centralized(p: DTLEProblem) -> CentralizedSolution:
    """Unique solution of ``A X A' - X + Q = 0``, symmetrized.

    Raises
    ------
    NoUniqueSolutionError
        When ``kron(A, A) - I`` is numerically singular.
    """
    n = p.n
    if n > MAX_N:
        raise DimensionError(f"centralized oracle is limited to n <= {MAX_N}, got {n}")
    M = matcore.kron(p.A, p.A) - np.eye(n * n)
    try:
        x = matcore.solve_linear(M, -matcore.vec_row(p.Q))
    except SingularMatrixError as exc:
        raise NoUniqueSolutionError(
            "kron(A, A) - I is singular; the equation has no unique solution",
            diagnostic={"column": exc.column, "pivot": exc.pivot},
        ) from exc
    X = matcore.unvec_row(x, n, n)
    X = 0.5 * (X + X.T)
    R = p.A @ X @ p.A.T - X + p.Q
    res = matcore.frobenius_norm(R)
    if res > RESIDUAL_TOL * (1.0 + matcore.frobenius_norm(p.Q)):
        raise NoUniqueSolutionError(
            f"solution residual {res:.3e} too large; system is ill-conditioned",
            diagnostic={"residual": res},
        )
    return CentralizedSolution(X, res, True)


def stack_permutation(n) -> np.ndarray:
    """``Pi`` with ``vec_row([Y X]) = Pi @ vec_row([Y; X])`` for ``n x n`` blocks."""
    size = 2 * n * n
    Pi = np.zeros((size, size))
    for r in range(n):
        for c in range(n):
            # Y[r, c]: row r of the vertical stack; row r, column c of the side-by-side
            Pi[r * 2 * n + c, r * n + c] = 1.0
            # X[r, c]: row n + r of the vertical stack; column n + c side-by-side
            Pi[r * 2 * n + n + c, n * n + r * n + c] = 1.0
    return Pi


def quadratic_factors(d: LocalData):
    """``(C1, C2)`` with ``f_i = 1/2 ||C1 z||^2 + 1/2 ||C2 z||^2`` about a solution."""
    n = d.n
    E_n = np.eye(n)
    E_r = d.E_l.T
    C1 = matcore.kron(np.hstack([E_r, -d.A_r]), E_n)
    C0 = matcore.kron(E_n, np.hstack([d.A_r, -d.E_l.T]))
    C2 = C0 @ stack_permutation(n)
    return C1, C2


def _check_reference(d: LocalData, X_star, Y_star, A=None):
    X_star = np.asarray(X_star, dtype=float)
    Y_star = np.asarray(Y_star, dtype=float)
    n = d.n
    if X_star.shape != (n, n) or Y_star.shape != (n, n):
        raise DimensionError("reference blocks must be n x n")
    # the agent can only see its own rows of Y* = A X* and its own residual columns
    T1 = Y_star[d.rows] - d.A_r @ X_star
    T2 = Y_star @ d.A_r.T - X_star[:, d.rows] + d.Q_l
    scale = 1.0 + matcore.frobenius_norm(X_star) + matcore.frobenius_norm(Y_star)
    if matcore.frobenius_norm(T1) > 1e-8 * scale or matcore.frobenius_norm(T2) > 1e-8 * scale:
        raise InvalidReferenceError("reference does not satisfy Y* = A X* and the equation")
    if A is not None and matcore.frobenius_norm(Y_star - A @ X_star) > 1e-8 * scale:
        raise InvalidReferenceError("reference does not satisfy Y* = A X*")


def build_quadratic(d: LocalData, reference, A=None) -> QuadraticForm:
    """``P_i = C1' C1 + C2' C2`` for agent ``d`` about ``reference = (X*, Y*)``.

    ``A`` (the full coefficient matrix) is optional; when given, the full
    ``Y* = A X*`` relation is checked as well as the agent's own blocks.
    """
    X_star, Y_star = reference
    _check_reference(d, X_star, Y_star, A)
    C1, C2 = quadratic_factors(d)
    return QuadraticForm(C1.T @ C1 + C2.T @ C2)


def global_quadratic(forms) -> np.ndarray:
    """Block-diagonal ``diag(P_1, ..., P_m)``."""
    return block_diag(*[q.P for q in forms])


def quadratic_value(q: QuadraticForm, dX, dY) -> float:
    z = matcore.vec_row(np.vstack([dY, dX]))
    return 0.5 * float(z @ q.P @ z)


def check_quadratic(d: LocalData, q: QuadraticForm, reference, samples=100, seed=0, scale=1.0) -> QuadraticCheck:
    """Compare ``f_i`` with its quadratic form on seeded random displacements."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    X_star, Y_star = (np.asarray(r, dtype=float) for r in reference)
    rng = _rng.generator(seed, _rng.SAMPLES)
    worst = 0.0
    n = d.n
    for s in range(samples):
        if s == 0:
            dX = np.zeros((n, n))
            dY = np.zeros((n, n))
        else:
            dX = rng.normal(scale=scale, size=(n, n))
            dY = rng.normal(scale=scale, size=(n, n))
        direct = local_objective(d, AgentEstimate(X_star + dX, Y_star + dY))
        form = quadratic_value(q, dX, dY)
        denom = max(abs(direct), abs(form))
        dev = abs(direct - form) / denom if denom > VALUE_FLOOR else 0.0
        worst = max(worst, dev)
    return QuadraticCheck(worst, samples)
