import numpy as np
import pytest

from mstlimit.trees import RootedWeightedTree, single_vertex


def path(n):
    edges = np.column_stack((np.arange(n - 1), np.arange(1, n)))
    return RootedWeightedTree.from_edges(n, edges, np.arange(1.0, n), 0)


def test_from_edges_orients_towards_root():
    t = RootedWeightedTree.from_edges(4, [(0, 1), (1, 2), (1, 3)], [0.5, 1.5, 2.5], 2)
    assert t.parent.tolist() == [1, 2, -1, 1]
    assert t.weight[0] == 0.5 and t.weight[1] == 1.5 and t.weight[3] == 2.5
    assert np.isnan(t.weight[2])
    assert t.depth.tolist() == [2, 1, 0, 2]


def test_rejects_non_trees():
    with pytest.raises(ValueError):
        RootedWeightedTree.from_edges(4, [(0, 1), (2, 3)], [1, 1], 0)
    with pytest.raises(ValueError):
        RootedWeightedTree.from_edges(4, [(0, 1), (1, 0), (2, 3)], [1, 1, 1], 0)
    with pytest.raises(ValueError):
        RootedWeightedTree(np.array([0, 0]), np.array([np.nan, 1.0]), 0)


def test_text_round_trip(tmp_path):
    t = path(6)
    t.write(tmp_path / "t.txt")
    text = (tmp_path / "t.txt").read_text()
    assert text.splitlines()[0] == "# rooted-tree n=6 root=0"
    back = RootedWeightedTree.read(tmp_path / "t.txt")
    assert np.array_equal(back.parent, t.parent)
    assert np.array_equal(back.weight[1:], t.weight[1:])


def test_seventeen_digits_round_trip_bit_exact():
    w = np.array([0.1, 1 / 3, np.pi])
    t = RootedWeightedTree.from_edges(4, [(0, 1), (0, 2), (2, 3)], w, 0)
    back = RootedWeightedTree.from_text(t.to_text())
    assert np.array_equal(np.sort(back.edge_weights), np.sort(w))


def test_missing_header():
    with pytest.raises(ValueError):
        RootedWeightedTree.from_text("0 1 1.0\n")


def test_degree_weights_and_distances():
    t = path(5)
    assert [t.degree(v) for v in range(5)] == [1, 2, 2, 2, 1]
    assert t.incident_weight(2) == 2.0 + 3.0
    assert t.distances_from(4).tolist() == [4, 3, 2, 1, 0]
    assert t.distances_from(4, 2).tolist() == [-1, -1, 2, 1, 0]


def test_subtree_and_reroot():
    t = path(5)
    s = t.subtree(t.depth <= 2)
    assert s.n == 3 and s.meta["original_ids"].tolist() == [0, 1, 2]
    with pytest.raises(ValueError):
        t.subtree(np.array([0, 2]))
    r = t.reroot(4)
    assert r.root == 4 and r.parent[3] == 4 and r.weight[3] == 4.0


def test_single_vertex():
    t = single_vertex()
    assert t.n == 1 and t.edges.shape == (0, 2) and t.degree(0) == 0
