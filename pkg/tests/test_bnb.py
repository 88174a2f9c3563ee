import itertools
import math

import numpy as np
import pytest

from ccpart import cuts
from ccpart.bnb import BnbConfig, bnb_solve, gap_percent, root_lb
from ccpart.encoding import decode, is_valid_partition
from ccpart.instance import Instance
from ccpart.lp import GE, LE
from ccpart.model import MilpModel, build, build_m1, build_m2, evaluate
from ccpart.oracle import brute_force_partition

from suite import complete, path, small_suite, star

P4 = Instance(path([1, 5, 2]), 2, 2)
# suite members both models close in well under a second
CHEAP = [small_suite(12)[i] for i in (0, 3, 4, 5, 6, 7, 9, 10, 11)]


class TestExamples:
    def test_path(self):
        r = bnb_solve(*build_m1(P4)).report
        assert r.obj == 3 and r.gap == 0 and r.status == "optimal"

    def test_star_is_infeasible_in_m2(self):
        # bypass the precheck so the search itself has to prove it
        r = bnb_solve(*build_m2(Instance(star(3), 2, 2), check=False)).report
        assert r.status == "infeasible" and r.obj is None

    def test_complete_graph(self):
        assert bnb_solve(*build_m1(Instance(complete(4), 2, 2))).report.obj == 2

    def test_json_keys(self):
        r = bnb_solve(*build_m2(P4)).report
        assert list(r.to_json()) == ["lb", "obj", "gap", "nodes", "time_s", "status"]


class TestRootBound:
    def test_plain_m1_collapses_to_zero(self):
        assert root_lb(build_m1(P4)[0]) == pytest.approx(0, abs=1e-9)
        assert bnb_solve(*build_m1(P4)).report.lb == pytest.approx(0, abs=1e-9)

    def test_lbc_with_unit_costs(self):
        inst = Instance(path([1] * 7), 2, 3)
        m, ix = build_m1(inst)
        assert root_lb(m, [cuts.lower_bound_cut(inst, ix, "m1")]) >= inst.n - inst.k - 1e-9

    def test_lbc_never_lowers_the_bound(self):
        for inst in small_suite(20):
            if brute_force_partition(inst).status != "optimal":
                continue
            for kind in ("m1", "m2"):
                m, ix = build(inst, kind)
                assert root_lb(m, [cuts.lower_bound_cut(inst, ix, kind)]) >= root_lb(m) - 1e-9


class TestLimits:
    def test_node_limit(self):
        inst = small_suite(2)[1]
        r = bnb_solve(*build_m2(inst), BnbConfig(node_limit=3)).report
        assert r.status == "node-limit" and r.nodes <= 3
        assert r.best_bound is not None

    def test_time_limit(self):
        inst = small_suite(2)[1]
        r = bnb_solve(*build_m2(inst), BnbConfig(time_limit=1e-3)).report
        assert r.status == "time-limit"

    def test_bad_config(self):
        with pytest.raises(ValueError):
            BnbConfig(time_limit=0)
        with pytest.raises(ValueError):
            BnbConfig(node_selection="bfs")


def test_gap_formula():
    assert gap_percent(10, 9) == pytest.approx(10)
    assert gap_percent(10, 11) == 0
    assert gap_percent(None, 3) is None


def knapsack_like(rng, n):
    m = MilpModel()
    for j in range(n):
        m.add_var(("v", j), 0, int(rng.integers(1, 3)), True, float(rng.integers(-9, 4)))
    for _ in range(3):
        m.add_row({j: float(rng.integers(0, 6)) for j in range(n)}, LE, float(rng.integers(5, 15)))
    m.add_row({j: 1.0 for j in range(n)}, GE, 1)
    return m


def brute_force_milp(m):
    best = None
    for x in itertools.product(*[range(int(lo), int(hi) + 1) for lo, hi in zip(m.lb, m.ub)]):
        ev = evaluate(m, np.array(x, float))
        if ev.feasible and (best is None or ev.objective < best):
            best = ev.objective
    return best


@pytest.mark.parametrize("method,selection", [("highs", "best-bound"), ("simplex", "best-bound"), ("highs", "dfs")])
def test_generic_milps_against_enumeration(method, selection):
    rng = np.random.default_rng(4)
    for _ in range(25):
        m = knapsack_like(rng, int(rng.integers(2, 6)))
        want = brute_force_milp(m)
        res = bnb_solve(m, config=BnbConfig(lp_method=method, node_selection=selection, check_duality=True))
        if want is None:
            assert res.report.status == "infeasible"
        else:
            assert res.report.obj == want
            assert evaluate(m, res.incumbent).feasible
        assert res.duality_failures == 0


@pytest.mark.parametrize("kind", ["m1", "m2"])
def test_incumbents_decode_to_valid_partitions(kind):
    for inst in CHEAP:
        opt = brute_force_partition(inst)
        if opt.status != "optimal":
            continue
        m, ix = build(inst, kind)
        res = bnb_solve(m, ix)
        assert res.report.obj == opt.objective
        assert evaluate(m, res.incumbent, tol=1e-6).feasible
        assert np.array_equal(res.incumbent[m.integer], np.round(res.incumbent[m.integer]))
        blocks = [b for b in decode(inst, ix, res.incumbent) if b]
        assert is_valid_partition(inst, blocks)
        assert all(len(b) <= inst.beta for b in blocks)
        assert res.report.best_bound <= res.report.obj


def test_lazy_size_cuts_fire_on_plain_m2():
    fired = 0
    for inst in CHEAP:
        if brute_force_partition(inst).status == "optimal":
            fired += bnb_solve(*build_m2(inst)).lazy_rows
    assert fired > 0


def test_deterministic_node_counts():
    inst = small_suite(4)[3]
    a = bnb_solve(*build_m1(inst)).report
    b = bnb_solve(*build_m1(inst)).report
    assert (a.nodes, a.obj, a.lb) == (b.nodes, b.obj, b.lb)


def test_cuts_leave_the_optimum_unchanged():
    inst = small_suite(6)[5]
    opt = brute_force_partition(inst)
    assert opt.status == "optimal"
    m, ix = build_m1(inst)
    for tag in cuts.FAMILIES:
        cut = cuts.apply_cuts(m, cuts.generate(inst, ix, "m1", [tag]))
        assert bnb_solve(cut, ix).report.obj == opt.objective, tag
    assert math.isfinite(opt.objective)
