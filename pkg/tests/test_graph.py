import itertools
import math

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccpart.graph import (
    Graph,
    articulation_nodes,
    boundary,
    components,
    cut_edges,
    enumerate_connected_subsets,
    hop_distances,
    induced_edge_cost,
    is_connected,
    is_separator,
    iter_connected_subsets,
    maximal_cliques,
)

from suite import complete, cycle, path, star

P4 = path([1, 5, 2])


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    costs = draw(st.lists(st.integers(0, 9), min_size=len(chosen), max_size=len(chosen)))
    return Graph(n, tuple(chosen), tuple(costs))


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


class TestGraphType:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph(3, ((1, 1),))

    def test_rejects_duplicate_edges_in_either_orientation(self):
        with pytest.raises(ValueError, match="duplicate"):
            Graph(3, ((0, 1), (1, 0)))

    def test_rejects_out_of_range_endpoint(self):
        with pytest.raises(ValueError, match="outside"):
            Graph(3, ((0, 3),))

    def test_rejects_negative_cost(self):
        with pytest.raises(ValueError, match="negative"):
            Graph(2, ((0, 1),), (-1,))

    def test_cost_count_must_match(self):
        with pytest.raises(ValueError):
            Graph(3, ((0, 1), (1, 2)), (1,))

    def test_default_unit_costs_and_lookup(self):
        g = Graph.from_edges(3, [(0, 1), (2, 1, 7)])
        assert g.cost(0, 1) == 1
        assert g.cost(1, 2) == 7
        assert g.has_edge(2, 1)
        assert not g.has_edge(0, 2)
        assert g.total_cost() == 8


class TestDistances:
    def test_path(self):
        assert hop_distances(P4, 0) == [0, 1, 2, 3]

    def test_single_node(self):
        assert hop_distances(Graph(1, ()), 0) == [0]

    def test_unreachable_is_infinite(self):
        assert hop_distances(Graph(2, ()), 0) == [0, math.inf]

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_matches_networkx_and_is_edge_lipschitz(self, g):
        ref = nx.single_source_shortest_path_length(to_nx(g), 0)
        d = hop_distances(g, 0)
        assert {v: d[v] for v in range(g.n) if d[v] < math.inf} == ref
        for u, v in g.edges:
            if d[u] < math.inf:
                assert abs(d[u] - d[v]) <= 1


class TestConnectivity:
    def test_examples(self):
        assert is_connected(P4, (0, 1))
        assert not is_connected(P4, (0, 2))
        assert is_connected(P4, (0, 1, 2))

    def test_empty_set_is_an_error(self):
        with pytest.raises(ValueError):
            is_connected(P4, ())

    @settings(max_examples=60, deadline=None)
    @given(graphs(), st.data())
    def test_matches_networkx(self, g, data):
        s = data.draw(st.sets(st.integers(0, g.n - 1), min_size=1))
        assert is_connected(g, s) == nx.is_connected(to_nx(g).subgraph(s))

    def test_components_within(self):
        assert components(P4, within=(0, 2, 3)) == [(0,), (2, 3)]

    def test_cut_and_boundary(self):
        assert sorted(cut_edges(P4, (1, 2))) == [0, 2]
        assert boundary(P4, (1, 2)) == (0, 3)


class TestArticulation:
    def test_examples(self):
        assert articulation_nodes(P4) == (1, 2)
        assert articulation_nodes(cycle(5)) == ()
        assert articulation_nodes(star(3)) == (0,)

    @settings(max_examples=80, deadline=None)
    @given(graphs())
    def test_agrees_with_networkx(self, g):
        assert set(articulation_nodes(g)) == set(nx.articulation_points(to_nx(g)))


class TestSeparator:
    def test_examples(self):
        assert is_separator(P4, 0, 2, (1,))
        assert is_separator(P4, 0, 3, (2,))
        assert not is_separator(cycle(5), 0, 2, (1,))

    def test_preconditions_reported_distinctly(self):
        with pytest.raises(ValueError, match="differ"):
            is_separator(P4, 1, 1, ())
        with pytest.raises(ValueError, match="adjacent"):
            is_separator(P4, 0, 1, ())
        with pytest.raises(ValueError, match="contain"):
            is_separator(P4, 0, 2, (0,))

    @settings(max_examples=40, deadline=None)
    @given(graphs(max_n=8), st.data())
    def test_monotone_and_matches_networkx(self, g, data):
        non = g.non_edges()
        if not non:
            return
        i, j = data.draw(st.sampled_from(non))
        rest = [v for v in range(g.n) if v not in (i, j)]
        s = data.draw(st.sets(st.sampled_from(rest))) if rest else set()
        h = to_nx(g)
        h.remove_nodes_from(s)
        assert is_separator(g, i, j, s) == (not nx.has_path(h, i, j))
        if is_separator(g, i, j, s):
            for extra in rest:
                assert is_separator(g, i, j, s | {extra})


class TestEnumeration:
    def test_examples(self):
        assert enumerate_connected_subsets(P4, 2, 2).subsets == [(0, 1), (1, 2), (2, 3)]
        assert sorted(enumerate_connected_subsets(P4, 2, 3).subsets) == [(0, 1), (0, 1, 2), (1, 2), (1, 2, 3), (2, 3)]
        assert enumerate_connected_subsets(complete(4), 4, 4).subsets == [(0, 1, 2, 3)]

    def test_limit_is_flagged(self):
        en = enumerate_connected_subsets(complete(5), 1, 5, limit=3)
        assert len(en.subsets) == 3 and not en.complete
        assert enumerate_connected_subsets(complete(5), 1, 5).complete

    def test_bad_range(self):
        with pytest.raises(ValueError):
            list(iter_connected_subsets(P4, 3, 2))

    @settings(max_examples=60, deadline=None)
    @given(graphs(max_n=8), st.data())
    def test_matches_brute_force(self, g, data):
        lo = data.draw(st.integers(1, g.n))
        hi = data.draw(st.integers(lo, g.n))
        got = enumerate_connected_subsets(g, lo, hi).subsets
        assert len(got) == len(set(got))
        want = {
            s
            for size in range(lo, hi + 1)
            for s in itertools.combinations(range(g.n), size)
            if nx.is_connected(to_nx(g).subgraph(s))
        }
        assert set(got) == want

    def test_tree_counts_subtrees(self):
        # a star with 4 leaves has 2^4 subtrees through the centre plus 4 single leaves
        assert len(enumerate_connected_subsets(star(4), 1, 5).subsets) == 16 + 4


class TestCost:
    def test_examples(self):
        assert induced_edge_cost(P4, (0, 1, 2)) == 6
        assert induced_edge_cost(P4, (3,)) == 0
        assert induced_edge_cost(complete(4), range(4)) == 6


def test_maximal_cliques_match_networkx():
    g = Graph(6, ((0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (3, 5), (4, 5)))
    assert sorted(maximal_cliques(g)) == sorted(tuple(sorted(c)) for c in nx.find_cliques(to_nx(g)))
