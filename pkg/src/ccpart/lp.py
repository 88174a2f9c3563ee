"""Linear programming with dual prices.

Two engines sit behind one result type:

* ``simplex`` -- a dense bounded-variable revised primal simplex written here
  (two-phase start, Dantzig pricing with a Bland fallback, explicit basis
  inverse refactored every 100 pivots).  Used for the restricted master
  problem and anywhere a self-contained certified LP is wanted.
* ``highs`` -- the HiGHS dual simplex through ``highspy``; ``HighsSession``
  keeps one model alive so branch-and-bound can warm start from the previous
  basis after bound changes and cut additions.

Sign convention for duals (minimisation): ``>=`` rows have duals >= 0, ``<=``
rows have duals <= 0, equality rows are free.  Reduced costs are
``c - A^T y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

TOL_FEAS = 1e-7
TOL_OPT = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100

LE, EQ, GE = "<", "=", ">"


@dataclass
class LpProblem:
    """min c.x  s.t.  A x (sense) rhs,  lb <= x <= ub."""

    c: np.ndarray
    A: sp.csr_matrix
    sense: list[str]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float, shape=(len(self.rhs), len(self.c)))
        if len(self.sense) != len(self.rhs):
            raise ValueError("one sense per row required")
        if np.any(self.lb > self.ub):
            raise ValueError("inconsistent variable bounds")

    @property
    def num_rows(self) -> int:
        return len(self.rhs)

    @property
    def num_cols(self) -> int:
        return len(self.c)

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.where([s == LE for s in self.sense], -np.inf, self.rhs)
        hi = np.where([s == GE for s in self.sense], np.inf, self.rhs)
        return lo, hi


@dataclass
class LpBasis:
    """Basic variables as signed keys: ``j >= 0`` structural, ``-(i+1)`` slack of row i."""

    basic: list[int]
    at_upper: frozenset[int] = frozenset()


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | numerical-failure | iteration-limit
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = math.nan
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0
    basis: Optional[LpBasis] = None
    used_bland: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def dual_objective(p: LpProblem, y: np.ndarray, tol: float = TOL_OPT) -> float:
    """Lagrangian dual value b.y + sum_j min over [lb_j, ub_j] of d_j x_j.

    Returns -inf when ``y`` has a wrong-signed component or a reduced cost pushes
    towards an infinite bound, i.e. when ``y`` is not dual feasible.
    """
    y = np.asarray(y, dtype=float)
    for s, v in zip(p.sense, y):
        if (s == LE and v > tol) or (s == GE and v < -tol):
            return -math.inf
    d = p.c - p.A.T @ y
    total = float(p.rhs @ y)
    for dj, lo, hi in zip(d, p.lb, p.ub):
        if dj > tol:
            if not np.isfinite(lo):
                return -math.inf
            total += dj * lo
        elif dj < -tol:
            if not np.isfinite(hi):
                return -math.inf
            total += dj * hi
        else:
            # near-zero reduced costs contribute at whichever finite bound is worse
            vals = [dj * b for b in (lo, hi) if np.isfinite(b)]
            total += min(vals) if vals else 0.0
    return total


def lp_strong_duality_check(p: LpProblem, sol: LpSolution, tol: float = TOL_OPT) -> bool:
    """Primal objective equals the dual objective recomputed from ``sol.duals``."""
    if not sol.optimal:
        return False
    primal = float(p.c @ sol.x)
    dual = dual_objective(p, sol.duals)
    return abs(primal - dual) <= tol * (1.0 + abs(primal))


def primal_violation(p: LpProblem, x: np.ndarray) -> float:
    ax = p.A @ x
    viol = 0.0
    for s, a, b in zip(p.sense, ax, p.rhs):
        if s in (LE, EQ):
            viol = max(viol, a - b)
        if s in (GE, EQ):
            viol = max(viol, b - a)
    viol = max(viol, float(np.max(p.lb - x, initial=0.0)), float(np.max(x - p.ub, initial=0.0)))
    return viol


# --------------------------------------------------------------------------- simplex


class _BoundedSimplex:
    """State for one primal simplex solve over columns [x | slacks | artificials]."""

    def __init__(self, p: LpProblem, bland_after: Optional[int], max_iter: int):
        self.p = p
        m, n = p.num_rows, p.num_cols
        self.m, self.n = m, n
        dense = p.A.toarray()
        # slack bounds encode the row sense: a.x + s = b
        s_lo = np.array([0.0 if s == LE else (-np.inf if s == GE else 0.0) for s in p.sense])
        s_hi = np.array([np.inf if s == LE else 0.0 for s in p.sense])
        self.cols = np.hstack([dense, np.eye(m)])
        self.lo = np.concatenate([p.lb, s_lo])
        self.hi = np.concatenate([p.ub, s_hi])
        self.cost = np.concatenate([p.c, np.zeros(m)])
        self.b = p.rhs.copy()
        self.bland_after = 10 * (m + n) if bland_after is None else bland_after
        self.max_iter = max_iter
        self.iterations = 0
        self.degenerate = 0
        self.use_bland = self.bland_after == 0

    # basis bookkeeping -------------------------------------------------------
    def _refactor(self) -> bool:
        B = self.cols[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            return False
        if not np.all(np.isfinite(self.Binv)):
            return False
        self._recompute_basic()
        self.since_refactor = 0
        return True

    def _recompute_basic(self) -> None:
        nonbasic = np.ones(self.cols.shape[1], dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.cols[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.Binv @ rhs

    def _nonbasic_start(self, j: int) -> float:
        lo, hi = self.lo[j], self.hi[j]
        if np.isfinite(lo):
            return lo
        if np.isfinite(hi):
            return hi
        return 0.0

    # main loop ---------------------------------------------------------------
    def _iterate(self, cost: np.ndarray) -> str:
        N = self.cols.shape[1]
        while True:
            if self.iterations >= self.max_iter:
                return "iteration-limit"
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.cols
            is_basic = np.zeros(N, dtype=bool)
            is_basic[self.basis] = True
            x = self.x
            can_up = (~is_basic) & (x < self.hi - TOL_FEAS) & (d < -TOL_OPT)
            can_down = (~is_basic) & (x > self.lo + TOL_FEAS) & (d > TOL_OPT)
            eligible = np.flatnonzero(can_up | can_down)
            if eligible.size == 0:
                return "optimal"
            if self.use_bland:
                q = int(eligible[0])
            else:
                q = int(eligible[np.argmax(np.abs(d[eligible]))])
            direction = 1.0 if can_up[q] else -1.0
            alpha = self.Binv @ self.cols[:, q]
            delta = -direction * alpha  # change of x_B per unit step of x_q
            step = self.hi[q] - self.lo[q]
            leave = -1
            leave_to_upper = False
            best_pivot = 0.0
            for r in range(self.m):
                dr = delta[r]
                if abs(dr) <= PIVOT_TOL:
                    continue
                j = self.basis[r]
                if dr < 0:
                    if not np.isfinite(self.lo[j]):
                        continue
                    t = max(self.x[j] - self.lo[j], 0.0) / -dr
                    to_upper = False
                else:
                    if not np.isfinite(self.hi[j]):
                        continue
                    t = max(self.hi[j] - self.x[j], 0.0) / dr
                    to_upper = True
                better = t < step - 1e-12
                tie = not better and abs(t - step) <= 1e-12 and leave >= 0
                if tie:
                    if self.use_bland:
                        better = j < self.basis[leave]
                    else:
                        better = abs(dr) > best_pivot
                if better:
                    step, leave, leave_to_upper, best_pivot = t, r, to_upper, abs(dr)
            if not np.isfinite(step):
                return "unbounded"
            self.iterations += 1
            if step <= 1e-12:
                self.degenerate += 1
                if self.degenerate >= self.bland_after:
                    self.use_bland = True
            self.x[q] += direction * step
            self.x[self.basis] += delta * step
            if leave < 0:
                # entering variable moved to its opposite bound; basis unchanged
                continue
            j_out = self.basis[leave]
            self.x[j_out] = self.hi[j_out] if leave_to_upper else self.lo[j_out]
            piv = alpha[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(alpha, row)
            self.Binv[leave] = row
            self.basis[leave] = q
            self.since_refactor += 1
            if self.since_refactor >= REFACTOR_EVERY and not self._refactor():
                return "numerical-failure"

    def _warm_start(self, basis: LpBasis) -> bool:
        m, n = self.m, self.n
        keys = [j if j >= 0 else n + (-j - 1) for j in basis.basic]
        if len(keys) != m or len(set(keys)) != m or any(k >= n + m for k in keys):
            return False
        self.x = np.array([self._nonbasic_start(j) for j in range(n + m)])
        upper = {j if j >= 0 else n + (-j - 1) for j in basis.at_upper}
        for j in upper:
            if j < n + m and np.isfinite(self.hi[j]):
                self.x[j] = self.hi[j]
        self.basis = keys
        if not self._refactor():
            return False
        xb = self.x[self.basis]
        if np.any(xb < self.lo[self.basis] - TOL_FEAS) or np.any(xb > self.hi[self.basis] + TOL_FEAS):
            return False
        return True

    def solve(self, warm: Optional[LpBasis]) -> LpSolution:
        m, n = self.m, self.n
        if warm is not None and self._warm_start(warm):
            status = self._iterate(self.cost)
            return self._finish(status)
        self.x = np.array([self._nonbasic_start(j) for j in range(n + m)])
        residual = self.b - self.cols @ self.x
        signs = np.where(residual >= 0, 1.0, -1.0)
        self.cols = np.hstack([self.cols, np.diag(signs)])
        self.lo = np.concatenate([self.lo, np.zeros(m)])
        self.hi = np.concatenate([self.hi, np.full(m, np.inf)])
        self.x = np.concatenate([self.x, np.abs(residual)])
        self.basis = list(range(n + m, n + 2 * m))
        self.Binv = np.diag(signs)
        self.since_refactor = 0
        phase1_cost = np.concatenate([np.zeros(n + m), np.ones(m)])
        status = self._iterate(phase1_cost)
        if status != "optimal":
            return LpSolution(status, iterations=self.iterations, used_bland=self.use_bland)
        infeas = float(self.x[n + m :].sum())
        if infeas > TOL_FEAS * max(1.0, float(np.abs(self.b).max(initial=0.0))):
            return LpSolution("infeasible", iterations=self.iterations, used_bland=self.use_bland)
        # artificials are pinned at zero for phase two
        self.hi[n + m :] = 0.0
        self.x[n + m :] = 0.0
        self.cost = np.concatenate([self.cost, np.zeros(m)])
        if not self._refactor():
            return LpSolution("numerical-failure", iterations=self.iterations)
        status = self._iterate(self.cost)
        return self._finish(status)

    def _finish(self, status: str) -> LpSolution:
        m, n = self.m, self.n
        if status != "optimal":
            return LpSolution(status, iterations=self.iterations, used_bland=self.use_bland)
        if not self._refactor():
            return LpSolution("numerical-failure", iterations=self.iterations)
        y = self.cost[self.basis] @ self.Binv
        x = self.x[:n].copy()
        d = self.p.c - self.p.A.T @ y
        basic = [j if j < n else -(j - n + 1) for j in self.basis if j < n + m]
        if len(basic) < m:
            basis = None  # an artificial is still basic (degenerate); no reusable basis
        else:
            in_basis = set(self.basis)
            upper = frozenset(
                j if j < n else -(j - n + 1)
                for j in range(n + m)
                if j not in in_basis and self.hi[j] > self.lo[j] and self.x[j] >= self.hi[j]
            )
            basis = LpBasis(basic, upper)
        return LpSolution(
            "optimal",
            x=x,
            objective=float(self.p.c @ x),
            duals=y,
            reduced_costs=d,
            iterations=self.iterations,
            basis=basis,
            used_bland=self.use_bland,
        )


def _simplex(p: LpProblem, warm_basis: Optional[LpBasis], bland_after: Optional[int], max_iter: int) -> LpSolution:
    return _BoundedSimplex(p, bland_after, max_iter).solve(warm_basis)


# --------------------------------------------------------------------------- HiGHS


def _highs():
    import highspy

    return highspy


class HighsSession:
    """A live HiGHS model supporting bound changes, appended rows and warm re-solves."""

    def __init__(self, p: LpProblem):
        hs = _highs()
        self.p = p
        self.h = hs.Highs()
        self.h.setOptionValue("output_flag", False)
        self.h.setOptionValue("threads", 1)
        self.h.setOptionValue("random_seed", 0)
        self.h.setOptionValue("presolve", "off")
        self.h.setOptionValue("primal_feasibility_tolerance", 1e-9)
        self.h.setOptionValue("dual_feasibility_tolerance", 1e-10)
        lp = hs.HighsLp()
        lp.num_col_ = p.num_cols
        lp.num_row_ = p.num_rows
        lp.col_cost_ = p.c
        lp.col_lower_ = p.lb
        lp.col_upper_ = p.ub
        lo, hi = p.row_bounds()
        lp.row_lower_ = lo
        lp.row_upper_ = hi
        csc = p.A.tocsc()
        csc.sort_indices()
        lp.a_matrix_.format_ = hs.MatrixFormat.kColwise
        lp.a_matrix_.start_ = csc.indptr
        lp.a_matrix_.index_ = csc.indices
        lp.a_matrix_.value_ = csc.data
        self.h.passModel(lp)
        self.lb = p.lb.copy()
        self.ub = p.ub.copy()

    def set_bounds(self, lb: np.ndarray, ub: np.ndarray) -> None:
        changed = np.flatnonzero((lb != self.lb) | (ub != self.ub))
        if changed.size:
            self.h.changeColsBounds(len(changed), changed.astype(np.int32), lb[changed], ub[changed])
            self.lb[changed] = lb[changed]
            self.ub[changed] = ub[changed]

    def add_rows(self, rows: Sequence[tuple[dict[int, float], str, float]]) -> None:
        """Append rows and keep ``self.p`` in sync so certificates stay checkable."""
        if not rows:
            return
        inf = math.inf
        lo, hi, starts, idx, val = [], [], [], [], []
        for coefs, sense, rhs in rows:
            lo.append(-inf if sense == LE else rhs)
            hi.append(inf if sense == GE else rhs)
            starts.append(len(idx))
            for j in sorted(coefs):
                idx.append(j)
                val.append(coefs[j])
        self.h.addRows(
            len(rows),
            np.array(lo, dtype=float),
            np.array(hi, dtype=float),
            len(idx),
            np.array(starts, dtype=np.int32),
            np.array(idx, dtype=np.int32),
            np.array(val, dtype=float),
        )
        extra = sp.csr_matrix(
            (val, idx, starts + [len(idx)]), shape=(len(rows), self.p.num_cols)
        )
        self.p = LpProblem(
            self.p.c,
            sp.vstack([self.p.A, extra]).tocsr(),
            list(self.p.sense) + [s for _, s, _ in rows],
            np.concatenate([self.p.rhs, [r for _, _, r in rows]]),
            self.p.lb,
            self.p.ub,
        )

    def current_problem(self) -> LpProblem:
        return LpProblem(self.p.c, self.p.A, self.p.sense, self.p.rhs, self.lb.copy(), self.ub.copy())

    def get_basis(self):
        """Snapshot of the current basis (None before the first optimal solve)."""
        b = self.h.getBasis()
        return (b, self.p.num_rows) if b.valid else None

    def set_basis(self, snap) -> None:
        """Restore a snapshot; rows appended since then start basic."""
        if snap is None:
            return
        b, nrows = snap
        if nrows != self.p.num_rows:
            hs = _highs()
            fresh = hs.HighsBasis()
            fresh.col_status = b.col_status
            fresh.row_status = list(b.row_status) + [hs.HighsBasisStatus.kBasic] * (self.p.num_rows - nrows)
            fresh.valid = True
            b = fresh
        self.h.setBasis(b)

    def solve(self) -> LpSolution:
        hs = _highs()
        self.h.run()
        ms = self.h.getModelStatus()
        info = self.h.getInfo()
        iters = int(info.simplex_iteration_count)
        if ms == hs.HighsModelStatus.kInfeasible:
            return LpSolution("infeasible", iterations=iters)
        if ms == hs.HighsModelStatus.kUnbounded:
            return LpSolution("unbounded", iterations=iters)
        if ms != hs.HighsModelStatus.kOptimal:
            return LpSolution("numerical-failure", iterations=iters)
        sol = self.h.getSolution()
        x = np.array(sol.col_value)
        y = np.array(sol.row_dual)
        d = np.array(sol.col_dual)
        return LpSolution("optimal", x=x, objective=float(self.p.c @ x), duals=y, reduced_costs=d, iterations=iters)


def lp_solve(
    p: LpProblem,
    warm_basis: Optional[LpBasis] = None,
    method: str = "simplex",
    bland_after: Optional[int] = None,
    max_iter: int = 200_000,
) -> LpSolution:
    """Solve ``p``; ``method`` is ``"simplex"`` (built-in) or ``"highs"``."""
    if method == "simplex":
        return _simplex(p, warm_basis, bland_after, max_iter)
    if method == "highs":
        return HighsSession(p).solve()
    raise ValueError(f"unknown LP method {method!r}")
