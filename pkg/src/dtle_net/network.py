"""Undirected communication graphs, mixing matrices and topology schedules.

Adjacency matrices use Metropolis weights

    a_ij = 1 / (1 + max(deg_i, deg_j))   for each edge {i, j}
    a_ii = 1 - sum_{j != i} a_ij

which keeps them symmetric and doubly stochastic. The Laplacian takes only the
off-diagonal weights, ``l_ij = -a_ij`` and ``l_ii = sum_{j != i} a_ij``, so it
equals ``I - adjacency``, is positive semidefinite, and has spectrum in ``[0, 2]``.

Nodes are numbered from 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _rng, matcore
from .errors import GraphError, ParameterError, ScheduleError

CONNECTIVITY_TOL = 1e-10
ROW_SUM_TOL = 1e-10

FINITE_CONNECTED = "finite-connected"
UNIFORMLY_CONNECTED = "uniformly-connected"
FAMILIES = (FINITE_CONNECTED, UNIFORMLY_CONNECTED)


def _normalize_edges(m, edges):
    out = set()
    for e in edges:
        i, j = (int(v) for v in e)
        if i == j:
            raise GraphError(f"self-loop at node {i}")
        if not (0 <= i < m and 0 <= j < m):
            raise GraphError(f"edge ({i}, {j}) references a node outside 0..{m - 1}")
        out.add((min(i, j), max(i, j)))
    return frozenset(out)


@dataclass(frozen=True, eq=False)
class Graph:
    m: int
    edges: frozenset
    adjacency: np.ndarray
    laplacian: np.ndarray

    def neighbors(self, i):
        return sorted({j for e in self.edges for j in e if i in e and j != i})

    def degrees(self):
        deg = np.zeros(self.m, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def is_connected(self) -> bool:
        return edges_connected(self.m, self.edges)


def edges_connected(m, edges) -> bool:
    if m <= 1:
        return True
    if not edges:
        return False
    rows, cols = zip(*edges)
    g = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    count, _ = connected_components(g, directed=False)
    return count == 1


def metropolis_adjacency(m: int, edges=()) -> Graph:
    if m < 1:
        raise GraphError(f"need at least one node, got m={m}")
    edges = _normalize_edges(m, edges)
    deg = np.zeros(m, dtype=int)
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    adj = np.zeros((m, m))
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1.0 / (1.0 + max(deg[i], deg[j]))
    off = adj.sum(axis=1)
    lap = -adj.copy()
    lap[np.diag_indices(m)] = off
    adj[np.diag_indices(m)] = 1.0 - off
    adj.setflags(write=False)
    lap.setflags(write=False)
    return Graph(m, edges, adj, lap)


@dataclass(frozen=True)
class LaplacianReport:
    eigenvalues: tuple
    lambda_min: float
    lambda_max: float
    algebraic_connectivity: float
    max_row_sum: float
    connected: bool

    @property
    def ok(self) -> bool:
        return (
            self.lambda_min >= -CONNECTIVITY_TOL
            and self.lambda_max <= 2.0 + CONNECTIVITY_TOL
            and self.max_row_sum <= 1e-12
        )


def laplacian_check(g: Graph) -> LaplacianReport:
    ev = matcore.sym_eigenvalues(g.laplacian)
    second = float(ev[1]) if g.m > 1 else 0.0
    return LaplacianReport(
        eigenvalues=tuple(float(x) for x in ev),
        lambda_min=float(ev[0]),
        lambda_max=float(ev[-1]),
        algebraic_connectivity=second,
        max_row_sum=float(np.max(np.abs(g.laplacian.sum(axis=1)))),
        connected=g.m == 1 or second > CONNECTIVITY_TOL,
    )


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    W: np.ndarray
    eta: float


def weight_matrix(g: Graph, alphas) -> MixingMatrix:
    """``W = I - diag(alpha) L / 2`` for one round."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (g.m,):
        raise ParameterError(f"need {g.m} step sizes, got shape {alphas.shape}")
    if np.any(alphas <= 0.0) or np.any(alphas > 1.0):
        raise ParameterError("step sizes must lie in (0, 1]")
    W = np.eye(g.m) - 0.5 * alphas[:, None] * g.laplacian
    if np.max(np.abs(W.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
        raise ArithmeticError("mixing matrix rows do not sum to one")
    if np.min(W) < -1e-12:
        raise ArithmeticError("mixing matrix has negative entries")
    positive = W[W > 0.0]
    W.setflags(write=False)
    return MixingMatrix(W, float(positive.min()))


# topology generators -------------------------------------------------------

def ring_edges(m):
    if m < 3:
        return path_edges(m)
    return [(i, (i + 1) % m) for i in range(m)]


def path_edges(m):
    return [(i, i + 1) for i in range(m - 1)]


def star_edges(m, hub=0):
    return [(hub, j) for j in range(m) if j != hub]


def complete_edges(m):
    return list(itertools.combinations(range(m), 2))


def random_spanning_tree_edges(m, rng):
    """Random labelled tree: each node after the first attaches to an earlier one."""
    order = rng.permutation(m)
    return [(int(order[k]), int(order[rng.integers(k)])) for k in range(1, m)]


def random_connected_edges(m, rng, p=0.5):
    """A random spanning tree plus each remaining pair independently with probability ``p``."""
    tree = _normalize_edges(m, random_spanning_tree_edges(m, rng))
    extra = [e for e in complete_edges(m) if e not in tree and rng.random() < p]
    return sorted(tree | set(extra))


def random_connected_family(m, count, seed, p=0.5):
    rng = _rng.generator(seed, _rng.GRAPHS)
    return [random_connected_edges(m, rng, p) for _ in range(count)]


# schedules -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TopologySchedule:
    """A finite graph family plus a seeded rule picking one graph per round.

    With ``slots`` unset the rule draws uniformly from all graphs each round.
    Otherwise round ``k`` uses slot ``k mod len(slots)`` and draws uniformly
    from the graph indices listed in that slot.
    """

    family: str
    graphs: tuple
    B: int
    seed: int
    slots: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.graphs[0].m

    def index(self, k: int) -> int:
        choices = self.slots[k % len(self.slots)] if self.slots else range(len(self.graphs))
        if len(choices) == 1:
            return choices[0]
        return choices[_rng.draw(self.seed, _rng.SCHEDULE, k) % len(choices)]

    def graph(self, k: int) -> Graph:
        return self.graphs[self.index(k)]

    def mixing(self, k: int, alphas) -> MixingMatrix:
        """Mixing matrix for round ``k``, memoised per graph for a fixed ``alphas``."""
        idx = self.index(k)
        key = (idx, tuple(float(a) for a in alphas))
        mm = self._cache.get(key)
        if mm is None:
            mm = self._cache[key] = weight_matrix(self.graphs[idx], alphas)
        return mm


def schedule_finite_connected(m, graph_specs, seed=0) -> TopologySchedule:
    """Uniformly random choice among connected graphs each round."""
    graphs = tuple(metropolis_adjacency(m, edges) for edges in graph_specs)
    if not graphs:
        raise ScheduleError("at least one graph is required")
    for idx, g in enumerate(graphs):
        if not g.is_connected():
            raise ScheduleError(f"graph {idx} is not connected")
    return TopologySchedule(FINITE_CONNECTED, graphs, 1, int(seed))


def schedule_uniformly_connected(m, B, seed=0, jitter=0.25, variants=3) -> TopologySchedule:
    """Rounds that are individually sparse but connected over every ``B``-window.

    The edges of a random spanning tree are dealt into ``B`` groups, and round
    ``k`` carries group ``k mod B``. For jitter, each group has ``variants``
    copies, and every copy also gets each non-tree pair with probability
    ``jitter``. A seeded draw picks the copy each round. Any ``B`` consecutive
    rounds still cover the whole tree.
    """
    if B < 1:
        raise ParameterError(f"B must be >= 1, got {B}")
    if not 0.0 <= jitter <= 1.0:
        raise ParameterError(f"jitter must lie in [0, 1], got {jitter}")
    if variants < 1:
        raise ParameterError(f"variants must be >= 1, got {variants}")
    rng = _rng.generator(seed, _rng.GRAPHS)
    tree = sorted(_normalize_edges(m, random_spanning_tree_edges(m, rng)))
    order = rng.permutation(len(tree))
    groups = [[tree[t] for t in order[g::B]] for g in range(B)]
    others = [e for e in complete_edges(m) if e not in set(tree)]
    graphs, slots = [], []
    for g in range(B):
        slot = []
        for _ in range(variants if jitter > 0.0 else 1):
            extra = [e for e in others if rng.random() < jitter]
            slot.append(len(graphs))
            graphs.append(metropolis_adjacency(m, groups[g] + extra))
        slots.append(tuple(slot))
    return TopologySchedule(UNIFORMLY_CONNECTED, tuple(graphs), int(B), int(seed), tuple(slots))


def cyclic_schedule(m, edge_lists, family=UNIFORMLY_CONNECTED, B=None, seed=0) -> TopologySchedule:
    """Deterministic cycle through the given graphs, one per round."""
    graphs = tuple(metropolis_adjacency(m, e) for e in edge_lists)
    B = len(graphs) if B is None else int(B)
    slots = tuple((i,) for i in range(len(graphs)))
    return TopologySchedule(family, graphs, B, int(seed), slots)


@dataclass(frozen=True)
class ScheduleReport:
    passed: bool
    window: int
    horizon: int
    eta: float | None
    first_violation: int | None
    message: str


def verify_schedule(s: TopologySchedule, horizon: int, alphas=None) -> ScheduleReport:
    """Check connectivity of every window of rounds ``0..horizon``.

    A finite-connected schedule is checked per round (window 1). A uniformly
    connected one is checked over every window of ``B`` consecutive rounds.
    When ``alphas`` is given, the report also carries the smallest positive
    mixing weight ``eta``. It fails if any self weight or edge weight falls
    below that.
    """
    window = 1 if s.family == FINITE_CONNECTED else s.B
    if horizon < window:
        raise ParameterError(f"horizon {horizon} shorter than window {window}")
    m = s.m
    edge_sets = [s.graph(k).edges for k in range(horizon + 1)]
    for start in range(horizon - window + 2):
        union = frozenset().union(*edge_sets[start:start + window])
        if not edges_connected(m, union):
            return ScheduleReport(
                False, window, horizon, None, start,
                f"rounds {start}..{start + window - 1}: edge union is disconnected",
            )
    eta = None
    if alphas is not None:
        eta = np.inf
        for k in range(horizon + 1):
            W = s.mixing(k, alphas).W
            eta = min(eta, float(W[W > 0.0].min()))
        for k in range(horizon + 1):
            g = s.graph(k)
            W = s.mixing(k, alphas).W
            weights = [W[i, i] for i in range(m)]
            weights += [W[i, j] for i, j in g.edges] + [W[j, i] for i, j in g.edges]
            if min(weights) < eta or eta <= 0.0:
                return ScheduleReport(
                    False, window, horizon, eta, k, f"round {k}: mixing weight below eta"
                )
    return ScheduleReport(True, window, horizon, eta, None, "ok")
