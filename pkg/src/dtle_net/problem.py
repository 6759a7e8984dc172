"""DTLE instances and the per-agent row/column-block decomposition.

The equation ``A X A' - X + Q = 0`` is split among ``m`` agents. Agent ``i``
owns a contiguous block of ``n_i`` row indices and holds

* ``A_r``: rows of ``A`` in its block (``n_i x n``),
* ``Q_l``: columns of ``Q`` in its block (``n x n_i``),
* ``E_l``: the matching columns of the identity.

Each agent keeps an estimate ``X_i`` of the solution and ``Y_i`` of ``A X``
and minimises

    f_i = 1/2 ||Y_i[rows] - A_r X_i||^2 + 1/2 ||Y_i A_r' - X_i E_l + Q_l||^2
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import DimensionError, ParameterError, PartitionError

DEFAULT_SAFETY = 0.5
Q_SYM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DTLEProblem:
    A: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        A = matcore.as_mat(self.A, "A")
        Q = matcore.as_mat(self.Q, "Q")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        if Q.shape != A.shape:
            raise DimensionError(f"Q has shape {Q.shape}, expected {A.shape}")
        gap = matcore.frobenius_norm(Q - Q.T)
        if gap > Q_SYM_TOL * (1.0 + matcore.frobenius_norm(Q)):
            raise DimensionError(f"Q must be symmetric (asymmetry {gap:.3e})")
        A.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class Partition:
    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise PartitionError("partition needs at least one block")
        if any(s < 1 for s in sizes):
            raise PartitionError(f"every block size must be >= 1, got {sizes}")
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def balanced(cls, n: int, m: int) -> "Partition":
        """``floor(n/m)`` rows each, the first ``n mod m`` agents one extra."""
        if m < 1 or m > n:
            raise PartitionError(f"cannot split n={n} rows among m={m} agents")
        q, r = divmod(n, m)
        return cls(tuple(q + 1 if i < r else q for i in range(m)))

    @property
    def m(self) -> int:
        return len(self.sizes)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Cumulative block starts, with ``n`` appended."""
        out = [0]
        for s in self.sizes:
            out.append(out[-1] + s)
        return tuple(out)


@dataclass(frozen=True, eq=False)
class LocalData:
    """Agent ``agent`` (0-based)'s private slice plus its step size."""

    agent: int
    offset: int
    A_r: np.ndarray
    Q_l: np.ndarray
    E_l: np.ndarray
    xi: float
    alpha: float

    @property
    def n(self) -> int:
        return self.A_r.shape[1]

    @property
    def size(self) -> int:
        return self.A_r.shape[0]

    @property
    def rows(self) -> slice:
        return slice(self.offset, self.offset + self.size)

    def with_alpha(self, alpha: float) -> "LocalData":
        return dataclasses.replace(self, alpha=float(alpha))

    def admissible(self) -> bool:
        return 0.0 < self.alpha < min(1.0, 1.0 / self.xi)


@dataclass(frozen=True, eq=False)
class AgentEstimate:
    X: np.ndarray
    Y: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "AgentEstimate":
        return cls(np.zeros((n, n)), np.zeros((n, n)))

    @property
    def Z(self) -> np.ndarray:
        """The stacked ``[Y; X]`` (``2n x n``)."""
        return np.vstack([self.Y, self.X])


def xi_bound(d: LocalData | None = None, *, A_r=None, E_l=None) -> float:
    """``2 (||A_r||_F^2 + ||E_l||_F^2)``, a valid curvature constant.

    Any ``xi`` at least this large satisfies

        ||-A_r' T1 - T2 E_l'||^2 + ||E_l T1 + T2 A_r||^2 <= xi (||T1||^2 + ||T2||^2)

    for every ``T1`` (``n_i x n``) and ``T2`` (``n x n_i``).
    """
    if d is not None:
        A_r, E_l = d.A_r, d.E_l
    return 2.0 * (matcore.frobenius_norm(A_r) ** 2 + matcore.frobenius_norm(E_l) ** 2)


def gradient_operator(d: LocalData) -> np.ndarray:
    """Matrix of ``(T1, T2) -> (-A_r' T1 - T2 E_l', E_l T1 + T2 A_r)`` on row-major vecs."""
    E_n = np.eye(d.n)
    # vec_row(L M R) = kron(L, R') vec_row(M)
    top = np.hstack([-matcore.kron(d.A_r.T, E_n), -matcore.kron(E_n, d.E_l)])
    bottom = np.hstack([matcore.kron(d.E_l, E_n), matcore.kron(E_n, d.A_r.T)])
    return np.vstack([top, bottom])


def xi_exact(d: LocalData) -> float:
    """Smallest constant satisfying the curvature inequality.

    It is the largest eigenvalue of ``G' G`` for the gradient operator ``G``.
    It is never larger than :func:`xi_bound`, so it admits larger steps.
    """
    G = gradient_operator(d)
    return float(matcore.sym_eigenvalues(G.T @ G)[-1])


def default_step(d: LocalData, safety: float = DEFAULT_SAFETY) -> float:
    if not 0.0 < safety < 1.0:
        raise ParameterError(f"safety must lie in (0, 1), got {safety}")
    return safety * min(1.0, 1.0 / d.xi)


def decompose(
    p: DTLEProblem,
    m: int,
    sizes=None,
    safety: float = DEFAULT_SAFETY,
    xi_rule: str = "frobenius",
) -> list[LocalData]:
    """Split ``p`` into ``m`` agents' local data.

    ``xi_rule`` is ``"frobenius"`` (closed-form bound, the default) or
    ``"exact"`` (tightest constant via an eigensolve).
    """
    n = p.n
    if m < 1 or m > n:
        raise PartitionError(f"infeasible partition: m={m} agents for n={n} rows")
    if sizes is None:
        part = Partition.balanced(n, m)
    else:
        part = Partition(tuple(sizes))
        if part.m != m:
            raise PartitionError(f"{part.m} block sizes given for m={m} agents")
        if part.n != n:
            raise PartitionError(f"block sizes sum to {part.n}, expected n={n}")
    if xi_rule not in ("frobenius", "exact"):
        raise ParameterError(f"unknown xi_rule {xi_rule!r}")
    E_n = np.eye(n)
    out = []
    offsets = part.offsets
    for i in range(m):
        lo, hi = offsets[i], offsets[i + 1]
        A_r = p.A[lo:hi].copy()
        Q_l = p.Q[:, lo:hi].copy()
        E_l = E_n[:, lo:hi].copy()
        for a in (A_r, Q_l, E_l):
            a.setflags(write=False)
        d = LocalData(i, lo, A_r, Q_l, E_l, xi=1.0, alpha=0.0)
        xi = xi_bound(d) if xi_rule == "frobenius" else xi_exact(d)
        d = dataclasses.replace(d, xi=xi)
        out.append(d.with_alpha(default_step(d, safety)))
    return out


def _check_shapes(d: LocalData, e: AgentEstimate):
    n = d.n
    if e.X.shape != (n, n) or e.Y.shape != (n, n):
        raise DimensionError(f"estimates must be {n}x{n}, got X {e.X.shape}, Y {e.Y.shape}")


def residual_blocks(d: LocalData, e: AgentEstimate):
    """``(T1, T2)``: the two local residuals whose squares make up ``f_i``."""
    _check_shapes(d, e)
    rows = d.rows
    T1 = e.Y[rows] - d.A_r @ e.X
    T2 = e.Y @ d.A_r.T - e.X[:, rows] + d.Q_l
    return T1, T2


def local_objective(d: LocalData, e: AgentEstimate) -> float:
    T1, T2 = residual_blocks(d, e)
    return 0.5 * float(np.sum(T1 * T1)) + 0.5 * float(np.sum(T2 * T2))


def local_gradients(d: LocalData, e: AgentEstimate):
    """Partial gradients ``(d_X, d_Y)`` of ``f_i``, each ``n x n``."""
    T1, T2 = residual_blocks(d, e)
    d_X = -d.A_r.T @ T1 - T2 @ d.E_l.T
    d_Y = d.E_l @ T1 + T2 @ d.A_r
    return d_X, d_Y


def assemble(locals_) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Restack ``(A, Q, E_n)`` from the agents' blocks."""
    A = np.vstack([d.A_r for d in locals_])
    Q = np.hstack([d.Q_l for d in locals_])
    E = np.hstack([d.E_l for d in locals_])
    return A, Q, E
