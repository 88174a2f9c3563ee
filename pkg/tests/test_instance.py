from math import comb

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccpart.graph import Graph, components
from ccpart.instance import (
    Instance,
    InstanceFormatError,
    SplitMix64,
    beta,
    check_distance_certificate,
    distant_set,
    dumps,
    generate,
    loads,
    precheck,
    read_instance,
    write_instance,
)
from ccpart.oracle import brute_force_partition

from suite import complete, path, small_suite, star


def test_beta_examples():
    assert beta(Instance(path([1] * 29), 4, 7)) == 9
    assert beta(Instance(path([1] * 9), 3, 3)) == 4
    assert beta(Instance(path([1] * 3), 2, 2)) == 2


@given(st.integers(2, 40), st.integers(2, 6), st.integers(2, 8))
def test_beta_at_least_alpha_iff_counting_condition(n, k, alpha):
    inst = Instance(Graph(n, ()), k, alpha)
    assert (inst.beta >= alpha) == (k * alpha <= n)


def test_instance_rejects_small_k_and_alpha():
    with pytest.raises(ValueError):
        Instance(path([1, 1]), 1, 2)
    with pytest.raises(ValueError):
        Instance(path([1, 1]), 2, 1)


class TestPrecheck:
    def test_size_bound(self):
        rep = precheck(Instance(path([1, 1, 1]), 2, 3))
        assert rep.infeasible and rep.reason == "size-bound"

    def test_path_is_not_refuted(self):
        assert not precheck(Instance(path([1, 5, 2]), 2, 2)).infeasible

    def test_star_refuted_by_distance_certificate(self):
        # the leaves are pairwise 2 = beta apart, so three of them cannot share two parts
        rep = precheck(Instance(star(3), 2, 2))
        assert rep.infeasible and rep.reason == "distance-certificate"
        assert check_distance_certificate(Instance(star(3), 2, 2), rep.witness)
        assert brute_force_partition(Instance(star(3), 2, 2)).status == "infeasible"

    def test_too_many_components(self):
        g = Graph(6, ((0, 1), (2, 3), (4, 5)))
        assert precheck(Instance(g, 2, 2)).reason == "too-many-components"

    def test_small_component(self):
        g = Graph(5, ((0, 1), (1, 2), (2, 3)))
        rep = precheck(Instance(g, 2, 2))
        assert rep.infeasible and rep.reason == "size-bound"

    def test_never_refutes_a_solvable_instance(self):
        for inst in small_suite(60):
            if precheck(inst).infeasible:
                assert brute_force_partition(inst).status == "infeasible"

    def test_distant_set_is_pairwise_far(self):
        inst = Instance(path([1] * 8), 3, 2)  # beta = 5
        L = distant_set(inst)
        assert len(L) >= 2
        d = nx.floyd_warshall(nx.path_graph(9))
        assert all(d[a][b] >= inst.beta for a in L for b in L if a != b)

    def test_certificate_checker_rejects_bad_witness(self):
        inst = Instance(star(3), 2, 2)
        assert not check_distance_certificate(inst, (1, 2))
        assert not check_distance_certificate(inst, (0, 1, 2))


class TestGenerator:
    def test_splitmix_reference_sequence(self):
        # values from the reference C implementation
        r = SplitMix64(0)
        assert [r.next() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
        r = SplitMix64(12345)
        assert [r.next() for _ in range(2)] == [0x22118258A9D111A0, 0x346EDCE5F713F8ED]

    def test_tree_and_determinism(self):
        a = generate(5, 4, 1, 9, seed=1)
        assert a.m == 4 and len(components(a)) == 1
        assert generate(5, 4, 1, 9, seed=1) == a
        assert dumps(Instance(a, 2, 2)) == "5 4 2 2\n0 1 1\n1 2 2\n2 3 7\n2 4 8\n"

    def test_full_m_gives_complete_graph(self):
        g = generate(4, 6, 1, 1, seed=9)
        assert g == complete(4)

    def test_m_out_of_range(self):
        with pytest.raises(ValueError):
            generate(5, 3, 1, 2, 0)
        with pytest.raises(ValueError):
            generate(5, 11, 1, 2, 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 12), st.data(), st.integers(0, 2**64 - 1))
    def test_connected_with_exact_edge_count(self, n, data, seed):
        m = data.draw(st.integers(n - 1, comb(n, 2)))
        g = generate(n, m, 2, 5, seed)
        assert g.m == m
        assert len(components(g)) == 1
        assert all(2 <= d <= 5 for d in g.costs)


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        inst = Instance(path([1, 5, 2]), 2, 2)
        f = tmp_path / "p4.inst"
        write_instance(inst, f)
        assert read_instance(f) == inst

    def test_comments_and_blank_lines(self):
        inst = loads("# a path\n4 3 2 2\n\n0 1 1  # first\n1 2 5\n2 3 2\n")
        assert inst.graph.costs == (1, 5, 2)

    def test_duplicate_edge(self):
        with pytest.raises(InstanceFormatError) as exc:
            loads("3 2 2 2\n0 1 1\n1 0 1\n")
        assert exc.value.line == 3

    def test_k_one(self):
        with pytest.raises(InstanceFormatError):
            loads("3 2 1 2\n0 1 1\n1 2 1\n")

    @pytest.mark.parametrize(
        "text",
        ["", "3 2 2\n", "3 2 2 2\n0 1 1\n", "3 1 2 2\n0 1\n", "3 1 2 2\n0 x 1\n", "3 1 2 2\n0 5 1\n", "3 1 2 2\n0 1 -2\n"],
    )
    def test_malformed(self, text):
        with pytest.raises(InstanceFormatError):
            loads(text)
