import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dtle_net import network as nw
from dtle_net.errors import GraphError, ParameterError, ScheduleError


def edge_sets(max_m=7):
    @st.composite
    def build(draw):
        m = draw(st.integers(2, max_m))
        pairs = list(itertools.combinations(range(m), 2))
        chosen = draw(st.lists(st.sampled_from(pairs), unique=True))
        return m, chosen

    return build()


# adjacency and Laplacian ---------------------------------------------------------

def test_metropolis_two_nodes():
    g = nw.metropolis_adjacency(2, [(0, 1)])
    assert g.adjacency.tolist() == [[0.5, 0.5], [0.5, 0.5]]
    assert g.laplacian.tolist() == [[0.5, -0.5], [-0.5, 0.5]]


def test_metropolis_complete_three():
    g = nw.metropolis_adjacency(3, nw.complete_edges(3))
    assert np.allclose(g.adjacency, np.full((3, 3), 1 / 3), rtol=0, atol=1e-15)


def test_metropolis_empty():
    g = nw.metropolis_adjacency(4, [])
    assert np.array_equal(g.adjacency, np.eye(4)) and not g.laplacian.any()


def test_metropolis_errors():
    with pytest.raises(GraphError):
        nw.metropolis_adjacency(3, [(1, 1)])
    with pytest.raises(GraphError):
        nw.metropolis_adjacency(3, [(0, 3)])
    with pytest.raises(GraphError):
        nw.metropolis_adjacency(0, [])


def test_star_with_three_leaves_is_doubly_stochastic():
    # zero self-weights cannot work here; Metropolis keeps a positive hub weight
    g = nw.metropolis_adjacency(4, nw.star_edges(4))
    assert np.allclose(g.adjacency.sum(axis=0), 1) and np.allclose(g.adjacency.sum(axis=1), 1)
    assert g.adjacency[0, 0] >= 0.0


@settings(max_examples=80, deadline=None)
@given(edge_sets())
def test_adjacency_and_laplacian_invariants(spec):
    m, edges = spec
    g = nw.metropolis_adjacency(m, edges)
    a = g.adjacency
    assert np.array_equal(a, a.T) and a.min() >= 0.0
    assert np.max(np.abs(a.sum(axis=1) - 1)) <= 1e-12 and np.max(np.abs(a.sum(axis=0) - 1)) <= 1e-12
    for i, j in itertools.permutations(range(m), 2):
        on_edge = (min(i, j), max(i, j)) in g.edges
        assert (a[i, j] > 0) == on_edge
    rep = nw.laplacian_check(g)
    assert rep.ok
    assert rep.lambda_min >= -1e-10 and rep.lambda_max <= 2 + 1e-10
    assert rep.connected == g.is_connected()


def test_laplacian_check_examples():
    path = nw.laplacian_check(nw.metropolis_adjacency(3, nw.path_edges(3)))
    assert path.connected and path.lambda_max <= 2
    empty = nw.laplacian_check(nw.metropolis_adjacency(3, []))
    assert not empty.connected and all(abs(x) == 0 for x in empty.eigenvalues)
    two = nw.laplacian_check(nw.metropolis_adjacency(2, [(0, 1)]))
    assert np.allclose(two.eigenvalues, [0.0, 1.0], rtol=0, atol=1e-14)


def test_neighbors_and_degrees():
    g = nw.metropolis_adjacency(4, nw.star_edges(4))
    assert g.neighbors(0) == [1, 2, 3] and g.neighbors(2) == [0]
    assert g.degrees().tolist() == [3, 1, 1, 1]


# mixing matrices -------------------------------------------------------------

def test_weight_matrix_example():
    mm = nw.weight_matrix(nw.metropolis_adjacency(2, [(0, 1)]), [1.0, 1.0])
    assert mm.W.tolist() == [[0.75, 0.25], [0.25, 0.75]]
    assert mm.eta == 0.25


def test_weight_matrix_disconnected_is_block_diagonal():
    g = nw.metropolis_adjacency(4, [(0, 1), (2, 3)])
    W = nw.weight_matrix(g, [0.3, 0.4, 0.5, 0.6]).W
    assert not W[:2, 2:].any() and not W[2:, :2].any()


def test_weight_matrix_rejects_bad_steps():
    g = nw.metropolis_adjacency(2, [(0, 1)])
    for alphas in ([0.0, 0.5], [0.5, 1.5], [0.5]):
        with pytest.raises(ParameterError):
            nw.weight_matrix(g, alphas)


@settings(max_examples=80, deadline=None)
@given(edge_sets(), st.data())
def test_weight_matrix_invariants(spec, data):
    m, edges = spec
    g = nw.metropolis_adjacency(m, edges)
    alphas = data.draw(st.lists(st.floats(1e-3, 1.0), min_size=m, max_size=m))
    mm = nw.weight_matrix(g, alphas)
    W = mm.W
    assert np.max(np.abs(W.sum(axis=1) - 1)) <= 1e-12
    assert W.min() >= -1e-12
    for i in range(m):
        assert W[i, i] == pytest.approx(1 - alphas[i] / 2 * g.laplacian[i, i], abs=1e-15)
    assert mm.eta == W[W > 0].min()
    same = nw.weight_matrix(g, [alphas[0]] * m).W
    assert np.linalg.norm(same - same.T) <= 1e-12
    assert np.max(np.abs(same.sum(axis=0) - 1)) <= 1e-12


def test_unequal_steps_break_column_sums():
    W = nw.weight_matrix(nw.metropolis_adjacency(2, [(0, 1)]), [1.0, 0.2]).W
    assert abs(W.sum(axis=0)[0] - 1) > 1e-3


# generators -----------------------------------------------------------------

@pytest.mark.parametrize("make", [nw.ring_edges, nw.path_edges, nw.star_edges, nw.complete_edges])
@pytest.mark.parametrize("m", [2, 3, 5, 8])
def test_named_topologies_connected(make, m):
    assert nw.metropolis_adjacency(m, make(m)).is_connected()


def test_random_generators_connected():
    g = np.random.default_rng(0)
    for m in range(1, 9):
        assert nw.edges_connected(m, nw.random_spanning_tree_edges(m, g))
        assert len(nw.random_spanning_tree_edges(m, g)) == max(m - 1, 0)
        assert nw.edges_connected(m, nw.random_connected_edges(m, g, 0.3))
    fam = nw.random_connected_family(5, 3, seed=4)
    assert fam == nw.random_connected_family(5, 3, seed=4)


# schedules ----------------------------------------------------------------

def test_finite_connected_singleton_is_constant():
    s = nw.schedule_finite_connected(5, [nw.ring_edges(5)], seed=99)
    assert {s.index(k) for k in range(100)} == {0}


def test_finite_connected_deterministic():
    specs = nw.random_connected_family(5, 3, seed=1)
    a = nw.schedule_finite_connected(5, specs, seed=7)
    b = nw.schedule_finite_connected(5, specs, seed=7)
    seq = [a.index(k) for k in range(300)]
    assert seq == [b.index(k) for k in range(300)]
    assert set(seq) == {0, 1, 2}
    c = nw.schedule_finite_connected(5, specs, seed=8)
    assert seq != [c.index(k) for k in range(300)]


def test_finite_connected_rejects_disconnected():
    with pytest.raises(ScheduleError):
        nw.schedule_finite_connected(4, [nw.ring_edges(4), [(0, 1)]])
    with pytest.raises(ScheduleError):
        nw.schedule_finite_connected(4, [])


def test_uniform_B1_each_round_connected():
    s = nw.schedule_uniformly_connected(6, 1, seed=3)
    assert all(s.graph(k).is_connected() for k in range(50))


@pytest.mark.parametrize("seed", range(5))
def test_uniform_windows_connected(seed):
    s = nw.schedule_uniformly_connected(5, 3, seed=seed)
    rep = nw.verify_schedule(s, 200, alphas=[0.2] * 5)
    assert rep.passed and rep.window == 3 and rep.eta > 0


def test_uniform_rounds_can_be_disconnected():
    s = nw.schedule_uniformly_connected(6, 3, seed=0, jitter=0.0)
    assert not any(s.graph(k).is_connected() for k in range(3))
    assert nw.verify_schedule(s, 60).passed


def test_uniform_deterministic():
    a = nw.schedule_uniformly_connected(5, 3, seed=2)
    b = nw.schedule_uniformly_connected(5, 3, seed=2)
    assert [a.graph(k).edges for k in range(60)] == [b.graph(k).edges for k in range(60)]


def test_uniform_parameter_errors():
    with pytest.raises(ParameterError):
        nw.schedule_uniformly_connected(5, 0)
    with pytest.raises(ParameterError):
        nw.schedule_uniformly_connected(5, 2, jitter=1.5)


def test_cycled_path_edges_valid():
    m = 5
    s = nw.cyclic_schedule(m, [[e] for e in nw.path_edges(m)], B=m - 1)
    assert nw.verify_schedule(s, 40).passed


def test_verify_finite_connected_window_one():
    s = nw.schedule_finite_connected(4, [nw.ring_edges(4), nw.star_edges(4)], seed=0)
    rep = nw.verify_schedule(s, 30, alphas=[0.3, 0.4, 0.5, 0.6])
    assert rep.passed and rep.window == 1


def test_verify_detects_isolated_node():
    s = nw.cyclic_schedule(4, [[(1, 2), (2, 3)], [(1, 3)]], B=2)
    rep = nw.verify_schedule(s, 20)
    assert not rep.passed and rep.first_violation == 0


def test_verify_horizon_too_short():
    s = nw.schedule_uniformly_connected(5, 4, seed=0)
    with pytest.raises(ParameterError):
        nw.verify_schedule(s, 2)


def test_mixing_is_cached():
    s = nw.schedule_finite_connected(3, [nw.ring_edges(3)])
    assert s.mixing(0, [0.5] * 3) is s.mixing(5, [0.5] * 3)
