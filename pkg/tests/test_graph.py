import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hampower.graph import (Graph, UnionGraph, common_neighborhood, is_complete_between, min_degree,
                            parse_edge_list, read_edge_list, write_edge_list)

from conftest import adjacency_sets


@st.composite
def edge_lists(draw, max_n=40):
    n = draw(st.integers(1, max_n))
    pairs = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
                         .filter(lambda e: e[0] != e[1]).map(lambda e: (min(e), max(e))), max_size=120))
    return n, sorted(pairs)


@given(edge_lists())
@settings(max_examples=80, deadline=None)
def test_bitset_and_csr_agree(data):
    n, pairs = data
    edges = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    a = Graph.from_edges(n, edges)
    b = Graph.from_edges(n, edges, bitset_threshold=0)
    assert a.uses_bitset and not b.uses_bitset
    assert np.array_equal(a.edges(), b.edges())
    assert np.array_equal(a.degrees(), b.degrees())
    us, vs = np.meshgrid(np.arange(n), np.arange(n))
    assert np.array_equal(a.has_edges(us.ravel(), vs.ravel()), b.has_edges(us.ravel(), vs.ravel()))
    for v in range(n):
        assert np.array_equal(a.neighbors(v), b.neighbors(v))


@given(edge_lists())
@settings(max_examples=60, deadline=None)
def test_dense_matches_edges_and_is_symmetric(data):
    n, pairs = data
    g = Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))
    A = g.dense()
    assert (A == A.T).all() and not A.diagonal().any()
    assert g.num_edges == len(pairs) == A.sum() // 2
    assert Graph.from_dense(A).edges().tolist() == [list(p) for p in pairs]


def test_from_edges_rejects_loops_and_duplicates():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 0)], strict=True)
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(0, 1), (1, 0)], strict=True)
    g = Graph.from_edges(3, [(0, 1), (1, 0), (2, 2)], strict=False)
    assert g.num_edges == 1


def test_min_degree_of_small_graphs():
    assert min_degree(Graph.complete(5)) == 4
    assert min_degree(Graph.cycle(7)) == 2
    assert min_degree(Graph.path(4)) == 1


def test_common_neighborhood_against_sets(rng):
    from conftest import random_graph
    g = random_graph(30, 0.4, rng)
    adj = adjacency_sets(g)
    for _ in range(20):
        T = rng.choice(30, size=3, replace=False).tolist()
        expect = set.intersection(*(adj[t] for t in T)) - set(T)
        assert set(common_neighborhood(g, T).tolist()) == expect
    with pytest.raises(ValueError):
        common_neighborhood(g, [])


def test_is_complete_between():
    g = Graph.complete(6)
    assert is_complete_between(g, [0, 1], [2, 3, 4])
    assert is_complete_between(g, [], [1])
    h = Graph.cycle(6)
    assert not is_complete_between(h, [0], [1, 2])
    with pytest.raises(ValueError):
        is_complete_between(g, [0, 1], [1, 2])


def test_union_graph_is_edge_union():
    h = Graph.from_edges(4, [(0, 1)])
    g = Graph.from_edges(4, [(2, 3), (0, 1)])
    u = UnionGraph(h, g)
    assert u.has_edge(0, 1) and u.has_edge(2, 3) and not u.has_edge(0, 2)
    assert u.neighbors(0).tolist() == [1]
    assert u.neighbors(3).tolist() == [2]


@given(edge_lists())
@settings(max_examples=40, deadline=None)
def test_edge_list_round_trip(tmp_path_factory, data):
    n, pairs = data
    g = Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))
    path = tmp_path_factory.mktemp("el") / "g.txt"
    write_edge_list(g, path)
    back = read_edge_list(path)
    assert back.n == n and np.array_equal(back.edges(), g.edges())


def test_edge_list_validation():
    with pytest.raises(ValueError, match="header"):
        parse_edge_list("0 1\n")
    with pytest.raises(ValueError, match="promises"):
        parse_edge_list("3 2\n0 1\n")
    with pytest.raises(ValueError, match="self-loop"):
        parse_edge_list("3 1\n1 1\n")
    with pytest.raises(ValueError, match="u < v"):
        parse_edge_list("3 1\n2 1\n")
    with pytest.raises(ValueError):
        parse_edge_list("3 2\n0 1\n0 1\n")
