import math

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from ccpart.lp import LpProblem, dual_objective, lp_solve, lp_strong_duality_check, primal_violation

TOL_OPT = 1e-9


def problem(c, rows, sense, rhs, lb=None, ub=None):
    c = np.asarray(c, float)
    return LpProblem(
        c,
        sp.csr_matrix(np.asarray(rows, float).reshape(len(rhs), len(c))),
        list(sense),
        np.asarray(rhs, float),
        np.zeros(len(c)) if lb is None else np.asarray(lb, float),
        np.full(len(c), math.inf) if ub is None else np.asarray(ub, float),
    )


def scipy_reference(p: LpProblem):
    A = p.A.toarray()
    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    for row, s, b in zip(A, p.sense, p.rhs):
        if s == "<":
            ub_rows.append(row), ub_rhs.append(b)
        elif s == ">":
            ub_rows.append(-row), ub_rhs.append(-b)
        else:
            eq_rows.append(row), eq_rhs.append(b)
    res = linprog(
        p.c,
        A_ub=np.array(ub_rows) if ub_rows else None,
        b_ub=ub_rhs or None,
        A_eq=np.array(eq_rows) if eq_rows else None,
        b_eq=eq_rhs or None,
        bounds=[(lo, None if math.isinf(hi) else hi) for lo, hi in zip(p.lb, p.ub)],
        method="highs",
    )
    return res


def assert_certified(p, sol):
    assert sol.optimal
    assert primal_violation(p, sol.x) <= 1e-7
    assert lp_strong_duality_check(p, sol)
    for s, y in zip(p.sense, sol.duals):
        if s == ">":
            assert y >= -TOL_OPT
        if s == "<":
            assert y <= TOL_OPT
    d = sol.reduced_costs
    for j in range(p.num_cols):
        if sol.x[j] > p.lb[j] + 1e-7 and sol.x[j] < p.ub[j] - 1e-7:
            assert abs(d[j]) <= 1e-7
        elif sol.x[j] <= p.lb[j] + 1e-7 and not sol.x[j] >= p.ub[j] - 1e-7:
            assert d[j] >= -1e-7
        elif sol.x[j] >= p.ub[j] - 1e-7 and not sol.x[j] <= p.lb[j] + 1e-7:
            assert d[j] <= 1e-7


@pytest.mark.parametrize("method", ["simplex", "highs"])
class TestExamples:
    def test_one_variable(self, method):
        p = problem([1], [[1]], ">", [3])
        sol = lp_solve(p, method=method)
        assert sol.objective == pytest.approx(3)
        assert sol.duals[0] == pytest.approx(1)
        assert_certified(p, sol)

    def test_rmp_of_path(self, method):
        # columns {0,1}, {1,2}, {2,3} with costs 1, 5, 2; rows: nodes 0..3 then convexity
        A = [[1, 0, 0], [1, 1, 0], [0, 1, 1], [0, 0, 1], [1, 1, 1]]
        p = problem([1, 5, 2], A, "=====", [1, 1, 1, 1, 2])
        sol = lp_solve(p, method=method)
        assert sol.objective == pytest.approx(3)
        assert np.allclose(sol.x, [1, 0, 1])
        assert sum(sol.duals[:4]) + 2 * sol.duals[4] == pytest.approx(3)
        assert_certified(p, sol)

    def test_infeasible(self, method):
        p = problem([0], [[1], [1]], "<>", [0, 1])
        assert lp_solve(p, method=method).status == "infeasible"

    def test_unbounded(self, method):
        p = problem([-1], [[1]], ">", [0])
        assert lp_solve(p, method=method).status == "unbounded"


def test_perturbed_duals_break_the_certificate():
    p = problem([1, 5, 2], [[1, 0, 0], [1, 1, 0], [0, 1, 1], [0, 0, 1], [1, 1, 1]], "=====", [1, 1, 1, 1, 2])
    sol = lp_solve(p)
    assert lp_strong_duality_check(p, sol)
    sol.duals = sol.duals.copy()
    sol.duals[0] += 1
    assert not lp_strong_duality_check(p, sol)


def test_dual_objective_rejects_wrong_signs():
    p = problem([1], [[1]], ">", [3])
    assert dual_objective(p, np.array([-1.0])) == -math.inf


def random_lp(rng, m, n):
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    A[rng.random((m, n)) < 0.4] = 0
    x0 = rng.uniform(0, 3, n)  # keep the system feasible
    sense = rng.choice(["<", "=", ">"], size=m)
    rhs = A @ x0
    rhs = np.where(sense == "<", rhs + rng.uniform(0, 2, m), rhs)
    rhs = np.where(sense == ">", rhs - rng.uniform(0, 2, m), rhs)
    ub = np.where(rng.random(n) < 0.5, x0 + rng.uniform(0, 3, n), math.inf)
    c = rng.integers(-5, 6, n).astype(float)
    return problem(c, A, sense, rhs, np.zeros(n), ub)


def test_random_lps_against_scipy():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(250):
        p = random_lp(rng, int(rng.integers(1, 8)), int(rng.integers(1, 9)))
        ref = scipy_reference(p)
        sol = lp_solve(p)
        if ref.status == 3:
            assert sol.status == "unbounded"
            continue
        assert ref.status == 0
        assert sol.optimal
        assert sol.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)
        assert_certified(p, sol)
        checked += 1
    assert checked > 100


def test_bland_from_the_start_agrees():
    rng = np.random.default_rng(11)
    for _ in range(60):
        p = random_lp(rng, 5, 7)
        a, b = lp_solve(p), lp_solve(p, bland_after=0)
        assert a.status == b.status
        if a.optimal:
            assert a.objective == pytest.approx(b.objective, abs=1e-8)
            assert b.used_bland


def test_beale_cycling_example_terminates():
    # classic LP on which Dantzig's rule with naive tie-breaking cycles
    p = problem(
        [-0.75, 20, -0.5, 6],
        [[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]],
        "<<<",
        [0, 0, 1],
    )
    for after in (None, 0, 1):
        sol = lp_solve(p, bland_after=after)
        assert sol.objective == pytest.approx(-1.25)
        assert_certified(p, sol)


def test_degenerate_set_partitioning_lp():
    # every node of a 6-cycle covered by pairs and triples: highly degenerate vertices
    n = 6
    cols = [(i, (i + 1) % n) for i in range(n)] + [(i, (i + 1) % n, (i + 2) % n) for i in range(n)]
    A = np.zeros((n + 1, len(cols)))
    for j, col in enumerate(cols):
        for i in col:
            A[i, j] = 1
        A[n, j] = 1
    c = [1.0] * n + [2.0] * n
    p = problem(c, A, "=" * (n + 1), [1] * n + [3])
    for after in (None, 0):
        sol = lp_solve(p, bland_after=after)
        assert sol.objective == pytest.approx(3)
        assert_certified(p, sol)


def test_warm_start_reaches_the_same_optimum_faster():
    rng = np.random.default_rng(3)
    p = random_lp(rng, 8, 12)
    while not lp_solve(p).optimal:
        p = random_lp(rng, 8, 12)
    first = lp_solve(p)
    again = lp_solve(p, warm_basis=first.basis)
    assert again.objective == pytest.approx(first.objective, abs=1e-9)
    assert again.iterations <= first.iterations
    assert again.iterations == 0


def test_deterministic():
    rng = np.random.default_rng(5)
    p = random_lp(rng, 6, 9)
    a, b = lp_solve(p), lp_solve(p)
    assert a.status == b.status and a.iterations == b.iterations
    assert np.array_equal(a.x, b.x) and np.array_equal(a.duals, b.duals)


def test_free_and_negative_bounds():
    p = problem([1, 1], [[1, -1]], "=", [2], lb=[-math.inf, -5], ub=[math.inf, 4])
    sol = lp_solve(p)
    ref = scipy_reference(p)
    assert sol.objective == pytest.approx(ref.fun)
    assert_certified(p, sol)
