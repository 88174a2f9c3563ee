"""LP-based branch and bound (with lazy cuts) over a :class:`MilpModel`."""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .lp import HighsSession, LpBasis, LpProblem, LpSolution, lp_solve, lp_strong_duality_check
from . import cuts, encoding
from .model import MilpModel, Row, VarIndex, evaluate

log = logging.getLogger(__name__)

INT_TOL = 1e-6
EPS = 1e-9

Separator = Callable[[np.ndarray], Sequence[Row]]
Heuristic = Callable[[np.ndarray], Optional[dict]]


@dataclass
class BnbConfig:
    time_limit: float = 3600.0
    node_limit: Optional[int] = None
    gap_tol: float = 1e-6
    node_selection: str = "best-bound"  # or "dfs"
    lp_method: str = "highs"
    check_duality: bool = False
    root_cut_rounds: int = 20
    heuristic_depth: int = 4  # run rounding at every node this shallow
    heuristic_every: int = 10  # and at every n-th node below it

    def __post_init__(self) -> None:
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node limit must be positive")
        if self.node_selection not in ("best-bound", "dfs"):
            raise ValueError(f"unknown node selection {self.node_selection!r}")


@dataclass
class SolveReport:
    lb: Optional[float]
    best_bound: Optional[float]
    obj: Optional[float]
    gap: Optional[float]
    nodes: int
    time_s: float
    status: str  # optimal | time-limit | node-limit | infeasible | no-incumbent

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("lb", "obj", "gap", "nodes", "time_s", "status")}


@dataclass
class BnbResult:
    report: SolveReport
    incumbent: Optional[np.ndarray] = None
    lp_solves: int = 0
    duality_checks: int = 0
    duality_failures: int = 0
    lazy_rows: int = 0


def gap_percent(incumbent: Optional[float], bound: Optional[float]) -> Optional[float]:
    if incumbent is None or bound is None:
        return None
    return max(0.0, 100.0 * (incumbent - bound) / max(abs(incumbent), EPS))


class _SimplexSession:
    """Same interface as :class:`HighsSession`, backed by the built-in simplex."""

    def __init__(self, p: LpProblem):
        self.p = p
        self.lb, self.ub = p.lb.copy(), p.ub.copy()
        self.basis: Optional[LpBasis] = None

    def set_bounds(self, lb, ub) -> None:
        self.lb, self.ub = lb.copy(), ub.copy()

    def add_rows(self, rows) -> None:
        import scipy.sparse as sp

        extra = sp.lil_matrix((len(rows), self.p.num_cols))
        for r, (coefs, _, _) in enumerate(rows):
            for j, a in coefs.items():
                extra[r, j] = a
        self.p = LpProblem(
            self.p.c,
            sp.vstack([self.p.A, extra.tocsr()]).tocsr(),
            list(self.p.sense) + [s for _, s, _ in rows],
            np.concatenate([self.p.rhs, [b for _, _, b in rows]]),
            self.p.lb,
            self.p.ub,
        )
        self.basis = None

    def current_problem(self) -> LpProblem:
        return LpProblem(self.p.c, self.p.A, self.p.sense, self.p.rhs, self.lb, self.ub)

    def get_basis(self):
        return self.basis

    def set_basis(self, snap) -> None:
        if snap is not None and len(snap.basic) == self.p.num_rows:
            self.basis = snap

    def solve(self) -> LpSolution:
        sol = lp_solve(self.current_problem(), warm_basis=self.basis)
        if sol.optimal and sol.basis is not None:
            self.basis = sol.basis
        return sol


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    changes: tuple = field(compare=False, default=())  # ((var, lo, hi), ...)
    depth: int = field(compare=False, default=0)
    basis: object = field(compare=False, default=None)  # parent's final basis
    parent: int = field(compare=False, default=-1)


def sc_separator(model: MilpModel, ix: VarIndex) -> Separator:
    """Lazy size cuts for the flow models: small support components get a cut row."""
    inst, kind = model.instance, model.kind

    def separate(x: np.ndarray) -> list[Row]:
        rows = []
        for S in cuts.separate_size_cuts(inst, ix, kind, x):
            rows += cuts.size_cut(inst, ix, kind, S).rows
        return rows

    return separate


def rounding_heuristic(model: MilpModel, ix: VarIndex) -> Heuristic:
    """Round y by argmax, repair into a valid partition, encode it back."""
    inst, kind = model.instance, model.kind

    def run(x: np.ndarray) -> Optional[dict]:
        blocks = encoding.repair(inst, encoding.decode(inst, ix, x))
        if blocks is None:
            return None
        return encoding.encode(inst, ix, kind, blocks)

    return run


def reduced_cost_fixings(sol: LpSolution, lb, ub, integer, incumbent: Optional[float], integral_obj: bool) -> tuple:
    """Integer variables that cannot leave their bound without the LP bound passing the incumbent."""
    if incumbent is None or sol.reduced_costs is None or len(sol.reduced_costs) != len(lb):
        return ()
    room = incumbent - sol.objective - (1 - INT_TOL if integral_obj else 0.0)
    if room < 0:
        return ()
    d, x = sol.reduced_costs, sol.x
    at_lo = integer & (lb < ub) & (np.abs(x - lb) <= INT_TOL) & (d > room + INT_TOL)
    at_hi = integer & (lb < ub) & (np.abs(x - ub) <= INT_TOL) & (-d > room + INT_TOL)
    out = [(int(j), lb[j], lb[j]) for j in np.flatnonzero(at_lo)]
    out += [(int(j), ub[j], ub[j]) for j in np.flatnonzero(at_hi)]
    return tuple(out)


def bnb_solve(
    model: MilpModel,
    index: Optional[VarIndex] = None,
    config: Optional[BnbConfig] = None,
    separator: Optional[Separator] | str = "default",
    heuristic: Optional[Heuristic] | str = "default",
) -> BnbResult:
    """Branch on the most fractional integer variable (ties: lowest id).

    ``separator`` maps an LP point to violated globally valid rows; it is called
    at every integral candidate and on the root's fractional points.
    ``heuristic`` maps an LP point to a full assignment; candidates are accepted
    only when :func:`evaluate` finds no violated row.  Both default to the S-C
    separator and rounding+repair when the model knows its instance.
    """
    cfg = config or BnbConfig()
    ix = index if index is not None else model.index
    flow_model = model.instance is not None and model.kind in ("m1", "m2")
    if separator == "default":
        separator = sc_separator(model, ix) if flow_model else None
    if heuristic == "default":
        heuristic = rounding_heuristic(model, ix) if flow_model else None
    start = time.perf_counter()
    model = model.copy()
    p = model.relaxation()
    session = HighsSession(p) if cfg.lp_method == "highs" else _SimplexSession(p)
    integer = np.array(model.integer, dtype=bool)
    base_lb, base_ub = p.lb.copy(), p.ub.copy()
    obj = np.array(model.obj, dtype=float)
    integral_obj = bool(
        np.all(obj[~integer] == 0) and np.all(np.mod(obj[integer], 1) == 0)
    )
    res = BnbResult(SolveReport(None, None, None, None, 0, 0.0, "no-incumbent"))
    incumbent_val: Optional[float] = None

    def cutoff(bound: float) -> bool:
        if incumbent_val is None:
            return False
        if integral_obj:
            return bound > incumbent_val - 1 + INT_TOL
        return bound >= incumbent_val - max(abs(incumbent_val), 1.0) * cfg.gap_tol

    def solve_lp() -> LpSolution:
        sol = session.solve()
        res.lp_solves += 1
        if cfg.check_duality and sol.optimal:
            res.duality_checks += 1
            if not lp_strong_duality_check(session.current_problem(), sol):
                res.duality_failures += 1
        return sol

    def try_incumbent(assign: np.ndarray, origin: str) -> None:
        nonlocal incumbent_val
        assign = assign.copy()
        assign[integer] = np.round(assign[integer])  # flows may keep float noise; the row check tolerates it
        ev = evaluate(model, assign, tol=INT_TOL)
        if not ev.feasible:
            log.debug("%s candidate rejected: %d rows violated", origin, len(ev.violated))
            return
        value = float(ev.objective)
        if integral_obj:
            value = float(round(value))
        if incumbent_val is None or value < incumbent_val - EPS:
            incumbent_val = value
            res.incumbent = assign

    def add_lazy(x: np.ndarray) -> bool:
        if separator is None:
            return False
        rows = list(separator(x))
        if not rows:
            return False
        for r in rows:
            model.add_row(r.coefs, r.sense, r.rhs, r.name or "lazy")
        session.add_rows([(r.coefs, r.sense, r.rhs) for r in rows])
        res.lazy_rows += len(rows)
        return True

    seq = 0
    heap: list[_Node] = []
    stack: list[_Node] = []
    push = (lambda nd: heapq.heappush(heap, nd)) if cfg.node_selection == "best-bound" else stack.append

    def pending() -> list[_Node]:
        return heap if cfg.node_selection == "best-bound" else stack

    def pop() -> _Node:
        return heapq.heappop(heap) if cfg.node_selection == "best-bound" else stack.pop()

    def open_bound() -> Optional[float]:
        nodes = pending()
        if not nodes:
            return None
        return heap[0].bound if cfg.node_selection == "best-bound" else min(nd.bound for nd in stack)

    push(_Node(-math.inf, seq))
    last_solved = -1
    status = None
    root_lb: Optional[float] = None

    while pending():
        elapsed = time.perf_counter() - start
        if elapsed >= cfg.time_limit:
            status = "time-limit"
            break
        if cfg.node_limit is not None and res.report.nodes >= cfg.node_limit:
            status = "node-limit"
            break
        if incumbent_val is not None:
            ob = open_bound()
            if ob is not None and ob > -math.inf:
                if gap_percent(incumbent_val, ob) / 100.0 <= cfg.gap_tol:
                    break
        node = pop()
        if cutoff(node.bound):
            continue
        lb, ub = base_lb.copy(), base_ub.copy()
        for var, lo, hi in node.changes:
            lb[var], ub[var] = lo, hi
        session.set_bounds(lb, ub)
        if node.parent != last_solved:
            session.set_basis(node.basis)
        last_solved = node.seq
        res.report.nodes += 1
        is_root = node.depth == 0 and node.seq == 0
        rounds = 0
        while True:
            sol = solve_lp()
            if not sol.optimal:
                break
            if is_root and root_lb is None:
                root_lb = sol.objective  # before any lazy rows, as the LB column reports
            x = sol.x
            frac = np.abs(x - np.round(x))
            frac[~integer] = 0.0
            fractional = bool(np.any(frac > INT_TOL))
            if cutoff(sol.objective):
                break
            if not fractional:
                if add_lazy(x):
                    continue
                assign = x.copy()
                assign[integer] = np.round(assign[integer])
                try_incumbent(assign, "lp")
                break
            if is_root and rounds < cfg.root_cut_rounds and add_lazy(x):
                rounds += 1
                continue
            break
        if not sol.optimal:
            if sol.status == "infeasible":
                continue
            log.warning("node LP ended with status %s; node dropped", sol.status)
            continue
        if cutoff(sol.objective) or not fractional:
            continue
        if heuristic is not None and (node.depth <= cfg.heuristic_depth or res.report.nodes % cfg.heuristic_every == 0):
            cand = heuristic(x)
            if cand is not None:
                try:
                    try_incumbent(np.array([cand[j] for j in range(model.num_vars)], dtype=float), "heuristic")
                except ValueError:
                    log.debug("heuristic produced an unencodable partition")
                if cutoff(sol.objective):
                    continue
        score = np.minimum(frac, 1 - frac)
        score[~integer] = -1.0
        j = int(np.argmax(score))  # argmax returns the lowest id on ties
        changes = node.changes + reduced_cost_fixings(sol, lb, ub, integer, incumbent_val, integral_obj)
        down = changes + ((j, lb[j], math.floor(x[j])),)
        up = changes + ((j, math.ceil(x[j]), ub[j]),)
        bound = sol.objective
        if integral_obj:
            bound = math.ceil(bound - INT_TOL)
        snap = session.get_basis()
        seq += 1
        push(_Node(bound, seq, down, node.depth + 1, snap, node.seq))
        seq += 1
        push(_Node(bound, seq, up, node.depth + 1, snap, node.seq))

    elapsed = time.perf_counter() - start
    ob = open_bound() if status in ("time-limit", "node-limit") else None
    if incumbent_val is None:
        if status is None:
            status = "infeasible"
            best = None
        else:
            best = ob
            status = status if status else "no-incumbent"
    else:
        if status is None:
            status = "optimal"
            best = incumbent_val if ob is None else min(ob, incumbent_val)
            remaining = open_bound()
            if remaining is not None:
                best = min(incumbent_val, remaining)
        else:
            best = incumbent_val if ob is None else min(ob, incumbent_val)
    if best is not None and integral_obj and math.isfinite(best):
        best = float(math.ceil(best - INT_TOL))
    res.report = SolveReport(
        lb=root_lb,
        best_bound=best,
        obj=incumbent_val,
        gap=gap_percent(incumbent_val, best),
        nodes=res.report.nodes,
        time_s=round(elapsed, 6),
        status=status,
    )
    return res


def root_lb(model: MilpModel, cutsets=(), lp_method: str = "highs") -> Optional[float]:
    """LP value at the root after appending static cut families (None if the LP is infeasible)."""
    m = cuts.apply_cuts(model, cutsets) if cutsets else model
    sol = lp_solve(m.relaxation(), method=lp_method)
    return sol.objective if sol.optimal else None
