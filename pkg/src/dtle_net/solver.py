"""Synchronous-round distributed iteration and its instrumentation.

Each round every agent mixes its neighbours' round-k estimates through the
mixing matrix ``W_k`` and takes a local gradient step:

    Z_i(k+1) = sum_j W_k[i, j] Z_j(k) - alpha_i grad f_i(Z_i(k)),   Z_i = [Y_i; X_i]

The whole round runs in one kernel call (compiled or numpy, see
:mod:`dtle_net._backend`). Metrics are computed every ``stride`` rounds.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend, _rng, oracle
from .errors import DimensionError, DivergenceError, EstimationError, NoUniqueSolutionError
from .network import Graph, MixingMatrix, weight_matrix
from .problem import AgentEstimate, DTLEProblem, LocalData, assemble, local_gradients, local_objective

DEFAULT_TOL = 1e-8
DEFAULT_STRIDE = 10
FLOOR_FACTOR = 1e-12
MIN_FIT_RECORDS = 10
RATE_R2 = 0.95

CSV_COLUMNS = (
    "k",
    "residual_mean",
    "residual_max",
    "disagreement",
    "consensus_error",
    "objective",
    "lyapunov_distance",
    "ergodic_bound_lhs",
)


@dataclass(frozen=True, eq=False)
class SolverState:
    """Round counter plus stacked estimates ``X[i]``, ``Y[i]`` of shape ``(m, n, n)``."""

    k: int
    X: np.ndarray
    Y: np.ndarray
    locals: tuple

    def __post_init__(self):
        m = len(self.locals)
        n = self.locals[0].n if m else 0
        if m == 0:
            raise DimensionError("need at least one agent")
        for name in ("X", "Y"):
            a = getattr(self, name)
            if a.shape != (m, n, n):
                raise DimensionError(f"{name} has shape {a.shape}, expected {(m, n, n)}")
        object.__setattr__(self, "locals", tuple(self.locals))

    @property
    def m(self) -> int:
        return len(self.locals)

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def agents(self) -> list[AgentEstimate]:
        return [AgentEstimate(self.X[i], self.Y[i]) for i in range(self.m)]

    @property
    def alphas(self) -> np.ndarray:
        return np.array([d.alpha for d in self.locals])


@dataclass(frozen=True)
class MetricRecord:
    k: int
    residual_mean: float
    residual_max: float
    disagreement: float
    consensus_error: float
    objective: float
    lyapunov_distance: float | None
    ergodic_bound_lhs: float
    trace: tuple | None = None

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]


@dataclass(eq=False)
class Trajectory:
    records: list
    final_state: SolverState
    running_means: tuple
    terminated: str
    q_norm: float
    reference: tuple | None = None
    initial_lyapunov_sq: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def floor(self) -> float:
        return FLOOR_FACTOR * (1.0 + self.q_norm)

    def column(self, name) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records])

    @property
    def last(self) -> MetricRecord:
        return self.records[-1]

    def rounds_to(self, threshold, column="residual_max"):
        """First recorded round whose ``column`` is at or below ``threshold``."""
        for r in self.records:
            if getattr(r, column) <= threshold:
                return r.k
        return None

    def to_csv(self, fh=None, trace=False) -> str | None:
        out = fh if fh is not None else io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        header = list(CSV_COLUMNS)
        width = 0
        if trace:
            width = self.final_state.n
            header += [f"x1_{c + 1}" for c in range(width)]
        writer.writerow(header)
        for r in self.records:
            cells = ["" if v is None else repr(v) for v in r.row()]
            if trace:
                cells += [repr(v) for v in (r.trace or ())]
            writer.writerow(cells)
        return out.getvalue() if fh is None else None


@dataclass(frozen=True)
class RateEstimate:
    slope: float
    r_squared: float
    window: tuple
    points: int

    @property
    def factor(self) -> float:
        """Per-round contraction factor ``exp(slope)``."""
        return math.exp(self.slope)

    @property
    def linear(self) -> bool:
        return self.slope < 0.0 and self.r_squared >= RATE_R2


# state construction ---------------------------------------------------------

def init_state(locals_, rule="zeros", scale=1.0, seed=0) -> SolverState:
    """Initial estimates: all zeros, or i.i.d. uniform in ``[-scale, scale]``."""
    locals_ = tuple(locals_)
    if not locals_:
        raise DimensionError("need at least one agent")
    n = locals_[0].n
    if any(d.n != n for d in locals_):
        raise DimensionError("agents disagree on n")
    m = len(locals_)
    if rule == "zeros":
        return SolverState(0, np.zeros((m, n, n)), np.zeros((m, n, n)), locals_)
    if rule == "random":
        rng = _rng.generator(seed, _rng.INIT)
        X = rng.uniform(-1.0, 1.0, size=(m, n, n)) * scale
        Y = rng.uniform(-1.0, 1.0, size=(m, n, n)) * scale
        return SolverState(0, X, Y, locals_)
    raise ValueError(f"unknown init rule {rule!r}")


def _system(locals_):
    A, Q, _ = assemble(locals_)
    offsets = np.array([d.offset for d in locals_] + [A.shape[0]], dtype=np.int_)
    alphas = np.array([d.alpha for d in locals_], dtype=float)
    return np.ascontiguousarray(A), np.ascontiguousarray(Q), offsets, alphas


def _round(A, Q, offsets, alphas, W, X, Y, X_out, Y_out, threads):
    _backend.kernels.round_step(A, Q, offsets, alphas, np.ascontiguousarray(W), X, Y, X_out, Y_out, threads)


def step(state: SolverState, g: Graph | MixingMatrix, threads=1) -> SolverState:
    """Advance every agent one synchronous round over graph ``g``."""
    size = g.W.shape[0] if isinstance(g, MixingMatrix) else g.m
    if size != state.m:
        raise DimensionError(f"graph has {size} nodes, state has {state.m} agents")
    W = g.W if isinstance(g, MixingMatrix) else weight_matrix(g, state.alphas).W
    A, Q, offsets, alphas = _system(state.locals)
    X = np.ascontiguousarray(state.X, dtype=float)
    Y = np.ascontiguousarray(state.Y, dtype=float)
    X_out = np.empty_like(X)
    Y_out = np.empty_like(Y)
    _round(A, Q, offsets, alphas, W, X, Y, X_out, Y_out, threads)
    return SolverState(state.k + 1, X_out, Y_out, state.locals)


def step_neighbor_form(state: SolverState, g: Graph) -> SolverState:
    """The same round written agent by agent with explicit neighbour differences.

    Slow; kept as an independent cross-check of :func:`step`.
    """
    if g.m != state.m:
        raise DimensionError(f"graph has {g.m} nodes, state has {state.m} agents")
    X_new = np.empty_like(state.X)
    Y_new = np.empty_like(state.Y)
    for i, d in enumerate(state.locals):
        d_X, d_Y = local_gradients(d, AgentEstimate(state.X[i], state.Y[i]))
        pull_X = np.zeros((state.n, state.n))
        pull_Y = np.zeros((state.n, state.n))
        for j in g.neighbors(i):
            a = g.adjacency[i, j]
            pull_X += a * (state.X[i] - state.X[j])
            pull_Y += a * (state.Y[i] - state.Y[j])
        X_new[i] = state.X[i] - d.alpha * d_X - 0.5 * d.alpha * pull_X
        Y_new[i] = state.Y[i] - d.alpha * d_Y - 0.5 * d.alpha * pull_Y
    return SolverState(state.k + 1, X_new, Y_new, state.locals)


# metrics ------------------------------------------------------------------

def residual(problem: DTLEProblem, X) -> float:
    """``||A X A' - X + Q||_F``."""
    X = np.asarray(X, dtype=float)
    if X.shape != problem.A.shape:
        raise DimensionError(f"X has shape {X.shape}, expected {problem.A.shape}")
    R = problem.A @ X @ problem.A.T - X + problem.Q
    return float(np.sqrt(np.sum(R * R)))


def _residuals(A, Q, X):
    R = np.matmul(np.matmul(A, X), A.T) - X + Q
    return np.sqrt(np.sum(R * R, axis=(1, 2)))


def disagreement(state) -> float:
    """``sum_i ||m X_i - sum_j X_j||_F``; zero exactly at consensus."""
    X = state.X if isinstance(state, SolverState) else np.asarray(state)
    m = X.shape[0]
    dev = m * X - X.sum(axis=0)
    return float(np.sum(np.sqrt(np.sum(dev * dev, axis=(1, 2)))))


def consensus_error(state: SolverState) -> float:
    """``max_i ||Z_i - mean_j Z_j||_F`` over the stacked ``[Y_i; X_i]``."""
    dX = state.X - state.X.mean(axis=0)
    dY = state.Y - state.Y.mean(axis=0)
    return float(np.max(np.sqrt(np.sum(dX * dX, axis=(1, 2)) + np.sum(dY * dY, axis=(1, 2)))))


def objective(state: SolverState) -> float:
    return float(sum(local_objective(d, e) for d, e in zip(state.locals, state.agents)))


def lyapunov_distance(state: SolverState, reference, alphas=None) -> float:
    """Step-weighted distance ``sqrt(sum_i (||X_i - X*_i||^2 + ||Y_i - Y*_i||^2) / alpha_i)``.

    ``reference`` is a pair ``(X_ref, Y_ref)`` of either ``(n, n)`` arrays
    shared by all agents or stacked ``(m, n, n)`` arrays.
    """
    X_ref, Y_ref = reference
    alphas = state.alphas if alphas is None else np.asarray(alphas, dtype=float)
    dX = state.X - np.asarray(X_ref)
    dY = state.Y - np.asarray(Y_ref)
    per_agent = np.sum(dX * dX, axis=(1, 2)) + np.sum(dY * dY, axis=(1, 2))
    return float(np.sqrt(np.sum(per_agent / alphas)))


def ergodic_lhs(locals_, X_bar, Y_bar) -> float:
    """``sum_i (1 - alpha_i xi_i) f_i`` evaluated at the running means."""
    return float(
        sum(
            (1.0 - d.alpha * d.xi) * local_objective(d, AgentEstimate(X_bar[i], Y_bar[i]))
            for i, d in enumerate(locals_)
        )
    )


def _record(A, Q, state, X_bar, Y_bar, reference, trace):
    with np.errstate(over="ignore", invalid="ignore"):
        return _metrics(A, Q, state, X_bar, Y_bar, reference, trace)


def _metrics(A, Q, state, X_bar, Y_bar, reference, trace):
    res = _residuals(A, Q, state.X)
    lyap = lyapunov_distance(state, reference) if reference is not None else None
    return MetricRecord(
        k=state.k,
        residual_mean=float(res.mean()),
        residual_max=float(res.max()),
        disagreement=disagreement(state),
        consensus_error=consensus_error(state),
        objective=objective(state),
        lyapunov_distance=lyap,
        ergodic_bound_lhs=ergodic_lhs(state.locals, X_bar, Y_bar),
        trace=tuple(float(v) for v in state.X[0, 0]) if trace else None,
    )


def resolve_reference(problem: DTLEProblem, reference="auto"):
    """Turn the ``reference`` run option into ``(X*, A X*)`` or ``None``."""
    if reference is None:
        return None
    if isinstance(reference, str):
        if reference != "auto":
            raise ValueError(f"unknown reference option {reference!r}")
        if problem.n > oracle.MAX_N:
            return None
        try:
            sol = oracle.solve_centralized(problem)
        except NoUniqueSolutionError:
            return None
        X_star = sol.X_star
    elif isinstance(reference, oracle.CentralizedSolution):
        X_star = reference.X_star
    elif isinstance(reference, tuple):
        return tuple(np.asarray(r, dtype=float) for r in reference)
    else:
        X_star = np.asarray(reference, dtype=float)
    return X_star, problem.A @ X_star


def run(
    problem: DTLEProblem,
    locals_,
    schedule,
    *,
    max_iters=10_000,
    tol=DEFAULT_TOL,
    stride=DEFAULT_STRIDE,
    init="zeros",
    init_scale=1.0,
    init_seed=0,
    reference="auto",
    trace=False,
    threads=None,
    state=None,
) -> Trajectory:
    """Iterate until ``residual_max <= tol`` or ``max_iters`` rounds.

    The tolerance is tested at recorded rounds (every ``stride`` rounds and
    round 0). ``schedule`` must provide ``mixing(k, alphas)``.

    Raises
    ------
    DivergenceError
        As soon as any estimate becomes non-finite. The partial trajectory is
        attached to the exception.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    locals_ = tuple(locals_)
    A, Q, offsets, alphas = _system(locals_)
    if A.shape != problem.A.shape or not (np.array_equal(A, problem.A) and np.array_equal(Q, problem.Q)):
        raise DimensionError("local data does not reassemble to the problem")
    if state is None:
        state = init_state(locals_, init, init_scale, init_seed)
    ref = resolve_reference(problem, reference)
    threads = min(_backend.thread_cap() if threads is None else int(threads), len(locals_))

    X = np.ascontiguousarray(state.X, dtype=float).copy()
    Y = np.ascontiguousarray(state.Y, dtype=float).copy()
    X_buf = np.empty_like(X)
    Y_buf = np.empty_like(Y)
    X_bar = X.copy()
    Y_bar = Y.copy()
    k0 = state.k
    current = SolverState(k0, X, Y, locals_)
    records = [_record(A, Q, current, X_bar, Y_bar, ref, trace)]
    init_lyap = records[0].lyapunov_distance
    q_norm = float(np.sqrt(np.sum(Q * Q)))

    def partial(term):
        return Trajectory(
            records, current, (X_bar.copy(), Y_bar.copy()), term, q_norm, ref,
            None if init_lyap is None else init_lyap ** 2,
        )

    terminated = "tol" if records[0].residual_max <= tol else "max_iters"
    count = 0
    while terminated != "tol" and count < max_iters:
        W = schedule.mixing(k0 + count, alphas).W
        _round(A, Q, offsets, alphas, W, X, Y, X_buf, Y_buf, threads)
        X, X_buf = X_buf, X
        Y, Y_buf = Y_buf, Y
        count += 1
        if not (np.isfinite(X).all() and np.isfinite(Y).all()):
            raise DivergenceError(k0 + count, partial("divergence"))
        X_bar += (X - X_bar) / count
        Y_bar += (Y - Y_bar) / count
        if count % stride == 0 or count == max_iters:
            current = SolverState(k0 + count, X, Y, locals_)
            rec = _record(A, Q, current, X_bar, Y_bar, ref, trace)
            records.append(rec)
            if rec.residual_max <= tol:
                terminated = "tol"
    current = SolverState(k0 + count, X.copy(), Y.copy(), locals_)
    return partial(terminated)


# rate and mixing diagnostics ---------------------------------------------

def fit_log_linear(ks, values):
    """Least-squares line through ``(k, log value)``; returns ``(slope, r_squared)``."""
    ks = np.asarray(ks, dtype=float)
    logs = np.log(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(ks, logs, 1)
    fitted = slope * ks + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    return float(slope), min(max(r2, 0.0), 1.0)


def estimate_linear_rate(traj, window=None, floor=None) -> RateEstimate:
    """Fit ``log(residual_max)`` against ``k``.

    ``traj`` is a :class:`Trajectory` or an iterable of ``(k, residual)``
    pairs. Only points above ten times the numerical floor are used. With no
    ``window``, the earliest quarter of the usable rounds is dropped as
    transient.
    """
    if isinstance(traj, Trajectory):
        points = [(r.k, r.residual_max) for r in traj.records]
        floor = traj.floor if floor is None else floor
    else:
        points = [(int(k), float(v)) for k, v in traj]
        floor = FLOOR_FACTOR if floor is None else floor
    usable = [(k, v) for k, v in points if math.isfinite(v) and v > 10.0 * floor]
    if window is not None:
        lo, hi = window
        usable = [(k, v) for k, v in usable if lo <= k <= hi]
    elif usable:
        k_first, k_last = usable[0][0], usable[-1][0]
        cut = k_first + 0.25 * (k_last - k_first)
        usable = [(k, v) for k, v in usable if k >= cut]
    if len(usable) < MIN_FIT_RECORDS:
        raise EstimationError(
            f"only {len(usable)} usable records above the numerical floor; need {MIN_FIT_RECORDS}"
        )
    ks, vs = zip(*usable)
    slope, r2 = fit_log_linear(ks, vs)
    return RateEstimate(slope, r2, (ks[0], ks[-1]), len(usable))


def transition_matrix(Ws, s, k) -> np.ndarray:
    """Ordered product ``W_s W_{s+1} ... W_k``."""
    if s < 0 or k < s or k >= len(Ws):
        raise IndexError(f"rounds {s}..{k} not covered by {len(Ws)} mixing matrices")
    out = np.asarray(getattr(Ws[s], "W", Ws[s]), dtype=float).copy()
    for t in range(s + 1, k + 1):
        out = out @ np.asarray(getattr(Ws[t], "W", Ws[t]), dtype=float)
    return out


def phi_bound(eta, B, m, gap) -> float:
    """Geometric bound on ``|Phi(k, s)_ij - 1/m|`` for ``gap = k - s``."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if B < 1 or m < 2 or gap < 0:
        raise ValueError("need B >= 1, m >= 2, gap >= 0")
    B0 = (m - 1) * B
    decay = 1.0 - eta ** B0
    return 2.0 * (1.0 + eta ** (-B0)) / decay * decay ** (gap / B0)
