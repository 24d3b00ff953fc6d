import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mstlimit import random_trees as rt


def all_trees(m):
    if m == 1:
        yield rt.LabelledTree(1, np.zeros((0, 2), dtype=np.int64))
        return
    for seq in itertools.product(range(1, m + 1), repeat=m - 2):
        yield rt.prufer_decode(seq, m)


def nx_tree(tree):
    g = nx.Graph()
    g.add_nodes_from(range(1, tree.m + 1))
    g.add_edges_from(map(tuple, tree.edges.tolist()))
    return g


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_cayley_count_and_validity(m):
    keys = set()
    for t in all_trees(m):
        assert nx.is_tree(nx_tree(t))
        keys.add(t.key())
    assert len(keys) == m ** (m - 2)


@given(st.integers(3, 14).flatmap(lambda m: st.tuples(st.just(m), st.lists(st.integers(1, m), min_size=m - 2, max_size=m - 2))))
def test_prufer_round_trip(case):
    m, seq = case
    t = rt.prufer_decode(seq, m)
    assert rt.prufer_encode(t).tolist() == seq


def test_prufer_errors():
    with pytest.raises(ValueError):
        rt.prufer_decode([1, 2], 5)
    with pytest.raises(ValueError):
        rt.prufer_decode([0, 2], 4)
    with pytest.raises(ValueError):
        rt.LabelledTree(3, np.array([[1, 2]]))


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_root_degree_pmf_exact(m):
    counts = np.zeros(m + 1)
    for t in all_trees(m):
        counts[np.sum(t.edges == 1)] += 1
    emp = counts / m ** (m - 2)
    assert np.max(np.abs(emp - rt.root_degree_pmf(m, np.arange(m + 1)))) <= 1e-12


def test_root_degree_pmf_sums_to_one():
    assert abs(rt.root_degree_pmf(50, np.arange(0, 60)).sum() - 1) < 1e-12
    assert rt.root_degree_pmf(5, 0) == 0.0 and rt.root_degree_pmf(5, 5) == 0.0


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_distance_tail_exact(m):
    counts = np.zeros(m + 1)
    for t in all_trees(m):
        d = dict(nx.all_pairs_shortest_path_length(nx_tree(t)))
        for a in range(1, m + 1):
            for b in range(1, m + 1):
                counts[d[a][b]] += 1
    pmf = counts / (m ** (m - 2) * m * m)
    tail = pmf[::-1].cumsum()[::-1]
    assert np.allclose(tail, rt.distance_tail(m, np.arange(m + 1)), atol=1e-12)


def test_uniform_tree_frequencies(rng):
    draws = [rt.uniform_labelled_tree(4, rng).key() for _ in range(16_000)]
    counts = np.array(list({k: draws.count(k) for k in set(draws)}.values()))
    assert counts.size == 16
    assert np.all(np.abs(counts - 1000) < 5 * math.sqrt(1000))


def test_ball_profile_and_diameter_match_networkx(rng):
    for _ in range(20):
        m = int(rng.integers(2, 60))
        lt = rt.uniform_labelled_tree(m, rng)
        t = lt.rooted()
        g = nx.relabel_nodes(nx_tree(lt), lambda v: v - 1)
        c = int(rng.integers(m))
        d = nx.single_source_shortest_path_length(g, c)
        prof = rt.ball_profile(t, c, 6)
        assert prof.tolist() == [sum(1 for v in d.values() if v <= r) for r in range(7)]
        verts, dist = rt.bfs_ball(t, c, 3)
        assert sorted(verts.tolist()) == sorted(v for v, x in d.items() if x <= 3)
        assert np.all(np.diff(dist) >= 0)
        assert rt.diameter(t) == nx.diameter(g)


def test_rooted_weights():
    lt = rt.prufer_decode([2, 2], 4)
    t = lt.rooted(root_label=2, weights=[1.0, 2.0, 3.0])
    assert t.root == 1 and t.degree(1) == 3
