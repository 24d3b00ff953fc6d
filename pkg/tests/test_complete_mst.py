import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mstlimit import complete_mst as cm
from mstlimit.lwc_metric import canonical_code, empirical_tv

from oracles import brute_hybrid, dense_matrix, naive_prim


def _nx_mst_edges(graph):
    i, j, w = graph.edge_list()
    G = nx.Graph()
    G.add_weighted_edges_from(zip(i.tolist(), j.tolist(), w.tolist()))
    return {frozenset(e) for e in nx.minimum_spanning_tree(G).edges()}


def _edges(tree):
    ids = tree.meta.get("original_ids", np.arange(tree.n))
    return {frozenset((int(ids[a]), int(ids[b]))) for a, b in tree.edges}


def test_three_vertex_example():
    w = np.array([[0, 1.0, 3.0], [1.0, 0, 2.0], [3.0, 2.0, 0]])
    t = cm.minimum_spanning_tree(cm.ImplicitCompleteGraph.from_matrix(w))
    assert _edges(t) == {frozenset((0, 1)), frozenset((1, 2))}
    assert sorted(t.edge_weights.tolist()) == [1.0, 2.0]


def test_weights_symmetric_and_reproducible():
    g1, g2 = cm.ImplicitCompleteGraph(300, 7), cm.ImplicitCompleteGraph(300, 7)
    i, j, w = g1.edge_list()
    assert np.array_equal(w, g2.edge_list()[2])
    assert np.array_equal(g1.weight(j, i), w)
    row = g1.row(5)
    assert row[5] == np.inf
    others = np.delete(np.arange(300), 5)
    assert np.array_equal(row[others], g1.weight(5, others))
    g3 = cm.ImplicitCompleteGraph(300, 8)
    assert np.mean(g3.edge_list()[2] == w) < 1e-3


def test_weights_are_exponential_with_mean_n_minus_1():
    g = cm.ImplicitCompleteGraph(400, 11)
    w = g.edge_list()[2]
    assert stats.kstest(w, "expon", args=(0, 399)).pvalue > 1e-3
    # the light part alone must follow the conditioned law
    lw = g.light_w
    p = -math.expm1(-g.cutoff / 399)
    cdf = lambda x: -np.expm1(-x / 399) / p
    assert stats.kstest(lw, cdf).pvalue > 1e-3


def test_weight_errors():
    g = cm.ImplicitCompleteGraph(10, 1)
    with pytest.raises(ValueError):
        g.weight(3, 3)
    with pytest.raises(ValueError):
        g.weight(0, 10)
    with pytest.raises(ValueError):
        g.below(g.cutoff + 1)
    with pytest.raises(ValueError):
        cm.ImplicitCompleteGraph(1, 0)
    with pytest.raises(ValueError):
        cm.ImplicitCompleteGraph.from_matrix(np.array([[0, 1.0], [2.0, 0]]))


@pytest.mark.parametrize("n,seed", [(2, 0), (37, 1), (120, 2), (200, 3)])
def test_mst_matches_networkx(n, seed):
    g = cm.ImplicitCompleteGraph(n, seed)
    t = cm.minimum_spanning_tree(g)
    assert t.n == n
    assert _edges(t) == _nx_mst_edges(g)


def test_mst_with_disconnected_light_graph():
    g = cm.ImplicitCompleteGraph(200, 4, margin=-3.0)
    t = cm.minimum_spanning_tree(g)
    assert t.meta["light_components"] > 1
    assert _edges(t) == _nx_mst_edges(g)


@pytest.mark.parametrize("start", [0, 17])
def test_prim_runs_agree(start):
    g = cm.ImplicitCompleteGraph(150, 5)
    order, via, weight = naive_prim(dense_matrix(g), start)
    dense = cm.prim_mst(g, 150, start=start)
    tree = cm.prim_order(cm.minimum_spanning_tree(g), start)
    for run in (dense, tree):
        assert np.array_equal(run.order, order)
        assert np.array_equal(run.via[1:], via[1:])
        assert np.allclose(run.weight[1:], weight[1:], rtol=0, atol=0)


def test_prefix_tree_is_mst_restriction():
    g = cm.ImplicitCompleteGraph(200, 9)
    mst = cm.minimum_spanning_tree(g)
    run = cm.prim_order(mst)
    t = run.tree(40)
    assert t.n == 40
    assert _edges(t) <= _edges(mst)
    assert set(t.meta["original_ids"].tolist()) == set(run.order[:40].tolist())


def test_prim_extends_until_d_known():
    g = cm.ImplicitCompleteGraph(500, 3)
    run = cm.prim_mst(g, 10, z=1.0)
    assert run.d(9, 1.0) <= run.steps or run.steps == 500


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 58), st.floats(0.3, 3.0))
def test_g_and_d_bracket_k(seed, k, z):
    g = cm.ImplicitCompleteGraph(60, seed)
    run = cm.prim_order(cm.minimum_spanning_tree(g))
    gg, dd = run.g(k, z), run.d(k, z)
    w = run.weight
    assert 0 <= gg <= k < dd <= 60
    assert gg == 0 or w[gg] >= z
    assert np.all(w[gg + 1 : k + 1] < z)
    assert dd == 60 or w[dd] >= z
    assert np.all(w[k + 1 : dd] < z)


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("z,extra,k", [(1.3, 0.0, None), (1.1, 0.6, None), (1.6, 0.0, 10), (1.2, 2.0, 25)])
def test_hybrid_against_brute_force(seed, z, extra, k):
    g = cm.ImplicitCompleteGraph(50, 1000 + seed)
    lam = z + extra
    kk = cm.default_k(50) if k is None else k
    bg, bd, forest, verts = brute_hybrid(dense_matrix(g), z, lam, kk)
    state = cm.hybrid_state(g, z, lam, k)
    assert (state.g, state.d) == (bg, bd)
    assert {frozenset(map(int, e)) for e in cm.forest_edges(state)} == forest
    tree = cm.hybrid_construct(g, z, lam, k)
    if verts is None:
        assert tree is None
        return
    assert set(tree.meta["original_ids"].tolist()) == verts
    if extra == 0:
        assert verts == set(state.run.order[: state.g].tolist())


def test_hybrid_errors():
    g = cm.ImplicitCompleteGraph(50, 1)
    with pytest.raises(ValueError):
        cm.hybrid_state(g, 1.0)
    with pytest.raises(ValueError):
        cm.hybrid_state(g, 1.5, 1.2)
    with pytest.raises(ValueError):
        cm.hybrid_state(g, 1.5, k=50)


def _zprim_matrix():
    w = np.full((6, 6), 0.0)
    big = iter(10.0 + 0.1 * np.arange(15))
    for a in range(6):
        for b in range(a + 1, 6):
            w[a, b] = next(big)
    for (a, b), x in {(0, 1): 0.5, (1, 2): 0.6, (1, 5): 2.0, (3, 4): 0.7, (2, 3): 3.0}.items():
        w[a, b] = x
    return np.maximum(w, w.T)


def test_zprim_hand_example():
    g = cm.ImplicitCompleteGraph.from_matrix(_zprim_matrix())
    state = cm.hybrid_state(g, 1.5, k=2)
    # Prim from 0: 1 (0.5), 2 (0.6), then 5 (2.0) is the first heavy edge after step 2
    assert (state.g, state.d) == (0, 3)
    assert set(state.prefix.tolist()) == {0, 1, 2}
    res = cm.z_prim(g, 5, state)
    assert (res.alpha, res.tau, res.m, res.lam) == (1, 2, 1, 1)
    res = cm.z_prim(g, 4, state)
    # component {3, 4} below z, then the 3-2 edge of weight 3.0
    assert (res.alpha, res.tau, res.m, res.lam) == (2, 3, 1, 2)
    assert res.component_sizes == [2]
    with pytest.raises(ValueError):
        cm.z_prim(g, 1, state)


def test_zprim_tree_is_a_tree_ending_in_prefix():
    g = cm.ImplicitCompleteGraph(3000, 2)
    state = cm.hybrid_state(g, 1.3, k=100)
    below = g.below(1.3)
    outside = np.flatnonzero(~state.in_prefix)
    for u in outside[:20]:
        res = cm.z_prim(g, int(u), state, below)
        ids = res.tree.meta["original_ids"]
        assert res.tree.n == ids.size
        assert state.in_prefix[res.alpha]
        assert np.sum(state.in_prefix[ids]) == 1
        assert res.tau == res.tree.n
        assert res.m == len(res.component_sizes) >= 1


def test_mean_root_degree_handshake():
    degs = []
    for s in range(200):
        t = cm.minimum_spanning_tree(cm.ImplicitCompleteGraph(500, s))
        degs.append(cm.ball_and_degree_stats(t, 0, 2).degree)
    degs = np.array(degs, dtype=float)
    target = 2 * 499 / 500
    assert abs(degs.mean() - target) < 4 * degs.std() / math.sqrt(degs.size)


def test_ball_stats_profile():
    t = cm.minimum_spanning_tree(cm.ImplicitCompleteGraph(400, 6))
    bs = cm.ball_and_degree_stats(t, 3, 5)
    assert bs.profile[0] == 1 and bs.profile[1] == 1 + bs.degree
    assert np.all(np.diff(bs.profile) >= 0)
    assert math.isclose(bs.incident_weight, t.incident_weight(3))


def _shape(t, root=None):
    return canonical_code(t, t.root if root is None else root, 2, math.inf)


@pytest.mark.slow
def test_radius_two_shapes_match_their_limits(rng):
    # the prefix seen from v_1 looks like T, the whole MST seen from a vertex looks like M
    from mstlimit.aggregation import grow_M_ball
    from mstlimit.pwit import sample_t_ball

    n, k, reps = 3000, 300, 1500
    mst_codes, prefix_codes, t1, t2, m1, m2 = ([] for _ in range(6))
    for s in range(reps):
        mst = cm.minimum_spanning_tree(cm.ImplicitCompleteGraph(n, 50_000 + s))
        mst_codes.append(_shape(mst, 0))
        prefix_codes.append(_shape(cm.prim_order(mst).tree(k)))
        t1.append(_shape(sample_t_ball(2, rng)))
        t2.append(_shape(sample_t_ball(2, rng)))
        m1.append(_shape(grow_M_ball(sample_t_ball(2, rng), 2, rng)))
        m2.append(_shape(grow_M_ball(sample_t_ball(2, rng), 2, rng)))
    floor_t, floor_m = empirical_tv(t1, t2), empirical_tv(m1, m2)
    assert empirical_tv(prefix_codes, t1) < floor_t + 0.04
    assert empirical_tv(mst_codes, m1) < floor_m + 0.04
    assert empirical_tv(mst_codes, t2) > floor_t + 0.08
