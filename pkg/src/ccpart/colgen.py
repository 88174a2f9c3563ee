"""Set-partitioning over connected components, solved by column generation.

The restricted master problem (RMP) has one equality row per node, the
convexity row ``sum x_f = k``, and optionally size-profile rows (CGC) and
subset rows.  Artificial columns keep it feasible for any pool:

* column ``i`` (``i < n``) covers node ``i`` only, cost ``M``;
* columns ``n`` and ``n + 1`` carry ``+1`` / ``-1`` in the convexity row, cost ``M``.

Pool columns follow, so indices of existing columns never move and the last
basis can warm start the next solve.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .bnb import BnbConfig, bnb_solve
from .graph import Graph, NodeSet, enumerate_connected_subsets, induced_edge_cost, is_connected, node_set
from .instance import Instance, precheck
from .lp import LpBasis, LpProblem, LpSolution, lp_solve, lp_strong_duality_check
from .model import MilpModel

log = logging.getLogger(__name__)

TOL_OPT = 1e-9
ART_TOL = 1e-9
EXACT_MAX_N = 22


@dataclass(frozen=True, order=True)
class Column:
    nodes: NodeSet
    cost: int

    @property
    def size(self) -> int:
        return len(self.nodes)

    def covers(self, i: int) -> bool:
        return i in self.nodes


def make_column(inst: Instance, nodes: Iterable[int]) -> Column:
    s = node_set(nodes)
    if not inst.alpha <= len(s) <= inst.beta:
        raise ValueError(f"column {s} has size outside [{inst.alpha}, {inst.beta}]")
    if not is_connected(inst.graph, s):
        raise ValueError(f"column {s} is not connected")
    return Column(s, induced_edge_cost(inst.graph, s))


@dataclass(frozen=True)
class CgcRow:
    """At most ``rhs`` chosen components may have ``ell`` or more nodes."""

    ell: int
    rhs: int


@dataclass(frozen=True)
class SubsetRow:
    """At most ``rhs`` chosen components with ``ell`` or more nodes lie inside ``S``."""

    S: NodeSet
    ell: int
    rhs: int

    def applies(self, col: Column) -> bool:
        return col.size >= self.ell and set(col.nodes) <= set(self.S)


@dataclass
class DualPrices:
    pi: tuple[float, ...]
    gamma: float
    sigma: tuple[float, ...] = ()  # aligned with the CGC rows, each <= 0
    tau: tuple[float, ...] = ()  # aligned with the subset rows, each <= 0


def cgc_rows(inst: Instance) -> list[CgcRow]:
    n, k, alpha, beta = inst.n, inst.k, inst.alpha, inst.beta
    lo = max(-(-n // k), alpha + 1)
    return [CgcRow(ell, (n - k * alpha) // (ell - alpha)) for ell in range(lo, beta + 1)]


def subset_bound_cut(inst: Instance, S: Iterable[int], ell: int) -> SubsetRow:
    S = node_set(S)
    if any(not 0 <= v < inst.n for v in S):
        raise ValueError("subset contains unknown nodes")
    if not inst.alpha <= ell <= inst.beta:
        raise ValueError(f"ell={ell} outside [{inst.alpha}, {inst.beta}]")
    if len(S) < ell:
        raise ValueError(f"|S|={len(S)} is smaller than ell={ell}")
    if len(S) == inst.n:
        # k-1 parts fit inside V minus one part, but all k fit inside V itself
        raise ValueError("S must be a proper subset of the nodes")
    return SubsetRow(S, ell, min(inst.k - 1, len(S) // ell))


def reduced_cost(col: Column, duals: DualPrices, cgc: Sequence[CgcRow] = (), subsets: Sequence[SubsetRow] = ()) -> float:
    terms = [float(col.cost), -duals.gamma]
    terms += [-duals.pi[i] for i in col.nodes]
    terms += [-s for row, s in zip(cgc, duals.sigma) if row.ell <= col.size]
    terms += [-t for row, t in zip(subsets, duals.tau) if row.applies(col)]
    return math.fsum(terms)


# --------------------------------------------------------------------------- RMP


@dataclass
class Rmp:
    problem: LpProblem
    pool: list[Column]
    cgc: list[CgcRow]
    subsets: list[SubsetRow]
    big_m: float

    @property
    def n_art(self) -> int:
        return self.problem.num_cols - len(self.pool)


def default_big_m(inst: Instance) -> float:
    return float(inst.graph.total_cost() + 1)


def build_rmp(
    pool: Sequence[Column],
    inst: Instance,
    cgc: Sequence[CgcRow] = (),
    subsets: Sequence[SubsetRow] = (),
    big_m: Optional[float] = None,
) -> Rmp:
    n = inst.n
    M = default_big_m(inst) if big_m is None else big_m
    n_rows = n + 1 + len(cgc) + len(subsets)
    n_art = n + 2
    rows, cols, vals = [], [], []
    for i in range(n):
        rows.append(i), cols.append(i), vals.append(1.0)
    rows += [n, n]
    cols += [n, n + 1]
    vals += [1.0, -1.0]
    for t, col in enumerate(pool):
        j = n_art + t
        for i in col.nodes:
            rows.append(i), cols.append(j), vals.append(1.0)
        rows.append(n), cols.append(j), vals.append(1.0)
        for r, row in enumerate(cgc):
            if row.ell <= col.size:
                rows.append(n + 1 + r), cols.append(j), vals.append(1.0)
        for r, row in enumerate(subsets):
            if row.applies(col):
                rows.append(n + 1 + len(cgc) + r), cols.append(j), vals.append(1.0)
    n_cols = n_art + len(pool)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n_rows, n_cols))
    c = np.array([M] * n_art + [float(col.cost) for col in pool])
    sense = ["="] * (n + 1) + ["<"] * (len(cgc) + len(subsets))
    rhs = np.array([1.0] * n + [float(inst.k)] + [float(r.rhs) for r in cgc] + [float(r.rhs) for r in subsets])
    lb = np.zeros(n_cols)
    ub = np.full(n_cols, math.inf)  # x_f <= 1 follows from any cover row
    return Rmp(LpProblem(c, A, sense, rhs, lb, ub), list(pool), list(cgc), list(subsets), M)


def extract_duals(rmp: Rmp, sol: LpSolution, n: int) -> DualPrices:
    y = sol.duals
    nc = len(rmp.cgc)
    return DualPrices(
        pi=tuple(float(v) for v in y[:n]),
        gamma=float(y[n]),
        sigma=tuple(float(v) for v in y[n + 1 : n + 1 + nc]),
        tau=tuple(float(v) for v in y[n + 1 + nc :]),
    )


# --------------------------------------------------------------------------- pricing


@dataclass(frozen=True)
class Priced:
    column: Column
    r: float


def _priced_order(p: Priced):
    return (p.r, p.column.nodes)


def heuristic_pricing(
    inst: Instance,
    duals: DualPrices,
    cgc: Sequence[CgcRow] = (),
    subsets: Sequence[SubsetRow] = (),
    tol: float = TOL_OPT,
) -> list[Priced]:
    """Greedy growth from every start node, recording negative columns.

    Growth picks the neighbour minimising ``cost(C + s) - pi(C + s)`` (lowest id on
    ties) and continues while ``|C| < beta``.  Sizes outside ``[alpha, beta]`` are
    never recorded.  Output is sorted by reduced cost, then node set.
    """
    g = inst.graph
    pi = duals.pi
    found: dict[NodeSet, Priced] = {}
    for start in range(inst.n):
        C = {start}
        cost = 0
        while len(C) < inst.beta:
            frontier = sorted({v for u in C for v in g.neighbors(u)} - C)
            if not frontier:
                break
            best = None
            for s in frontier:
                gain = sum(g.cost(s, u) for u in g.neighbors(s) if u in C)
                value = math.fsum([cost + gain] + [-pi[v] for v in C] + [-pi[s]])
                if best is None or value < best[0]:
                    best = (value, s, gain)
            _, s, gain = best
            C.add(s)
            cost += gain
            if len(C) >= inst.alpha:
                col = Column(node_set(C), cost)
                r = reduced_cost(col, duals, cgc, subsets)
                if r < -tol and col.nodes not in found:
                    found[col.nodes] = Priced(col, r)
    return sorted(found.values(), key=_priced_order)


@dataclass
class ExactPricing:
    best: Optional[Priced]
    certified: bool  # True: enumeration was complete
    negatives: list[Priced] = field(default_factory=list)


def all_columns(inst: Instance, limit: Optional[int] = None) -> tuple[list[Column], bool]:
    en = enumerate_connected_subsets(inst.graph, inst.alpha, inst.beta, limit)
    cols = [Column(s, induced_edge_cost(inst.graph, s)) for s in en.subsets]
    return sorted(cols, key=lambda c: c.nodes), en.complete


def exact_pricing(
    inst: Instance,
    duals: DualPrices,
    limit: Optional[int] = None,
    cgc: Sequence[CgcRow] = (),
    subsets: Sequence[SubsetRow] = (),
    tol: float = TOL_OPT,
    columns: Optional[Sequence[Column]] = None,
    max_n: int = EXACT_MAX_N,
) -> ExactPricing:
    """Minimum reduced-cost connected column by enumeration.

    ``best`` is None with ``certified`` True when no column prices out, which
    proves the RMP optimal.  Ties go to the lexicographically smallest node set.
    Pass ``columns`` to reuse an enumeration across calls.
    """
    complete = True
    if columns is None:
        if inst.n > max_n and limit is None:
            raise ValueError(f"exact pricing refused for n={inst.n} > {max_n} without an enumeration limit")
        columns, complete = all_columns(inst, limit)
    negatives = []
    for col in columns:
        r = reduced_cost(col, duals, cgc, subsets)
        if r < -tol:
            negatives.append(Priced(col, r))
    negatives.sort(key=_priced_order)
    best = negatives[0] if negatives else None
    return ExactPricing(best, complete, negatives)


# --------------------------------------------------------------------------- loop


def initial_pool(inst: Instance) -> list[Column]:
    """Chunk a BFS order into k consecutive pieces of sizes alpha, ..., alpha, beta."""
    g = inst.graph
    order, seen = [], {0}
    queue = [0]
    while queue:
        u = queue.pop(0)
        order.append(u)
        for v in g.neighbors(u):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    sizes = [inst.alpha] * (inst.k - 1) + [inst.beta]
    pool, at = [], 0
    for s in sizes:
        chunk = order[at : at + s]
        at += s
        if len(chunk) == s and is_connected(g, chunk):
            pool.append(make_column(inst, chunk))
    return pool


@dataclass
class ColgenConfig:
    exact: bool = True
    cgc: bool = False
    subsets: tuple = ()  # (S, ell) pairs
    max_iters: int = 10_000
    time_limit: float = 3600.0
    columns_per_iter: int = 200
    enumeration_limit: Optional[int] = None
    lp_method: str = "simplex"
    check_duality: bool = True
    big_m_escalations: int = 6
    precheck: bool = True  # off: let the artificials reveal infeasibility


@dataclass
class ColgenReport:
    lp_bound: Optional[float]  # set only when certified
    certified: bool
    obj: Optional[float]
    columns: int
    iters: int
    time_s: float
    status: str  # optimal | infeasible | pool-infeasible | possibly-infeasible | time-limit | heuristic
    heuristic_lp: Optional[float] = None
    pricing: str = "exact"

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("lp_bound", "certified", "obj", "columns", "iters", "time_s", "status")}


@dataclass
class ColgenResult:
    report: ColgenReport
    pool: list[Column]
    partition: Optional[list[NodeSet]] = None
    rmp_values: list[float] = field(default_factory=list)
    final_duals: Optional[DualPrices] = None
    artificial_level: float = 0.0
    duality_checks: int = 0
    duality_failures: int = 0
    cgc: list[CgcRow] = field(default_factory=list)
    subsets: list[SubsetRow] = field(default_factory=list)
    phase_one: Optional[float] = None


def solve_rmp(rmp: Rmp, method: str = "simplex", warm: Optional[LpBasis] = None) -> LpSolution:
    if method == "simplex":
        return lp_solve(rmp.problem, warm_basis=warm)
    return lp_solve(rmp.problem, method=method)


def cg_loop(inst: Instance, config: Optional[ColgenConfig] = None, pool: Optional[Sequence[Column]] = None) -> ColgenResult:
    cfg = config or ColgenConfig()
    start = time.perf_counter()
    pricing_mode = "exact" if cfg.exact else "heuristic"
    if cfg.precheck and precheck(inst).infeasible:
        report = ColgenReport(None, False, None, 0, 0, round(time.perf_counter() - start, 6), "infeasible", pricing=pricing_mode)
        return ColgenResult(report, [])
    cgc = cgc_rows(inst) if cfg.cgc else []
    subsets = [subset_bound_cut(inst, S, ell) for S, ell in cfg.subsets]
    pool = list(pool) if pool is not None else initial_pool(inst)
    seen = {c.nodes for c in pool}
    enum_cols: Optional[list[Column]] = None
    enum_complete = True
    if cfg.exact:
        if inst.n > EXACT_MAX_N and cfg.enumeration_limit is None:
            log.warning("n=%d too large for exact pricing; falling back to heuristic pricing", inst.n)
            pricing_mode = "heuristic"
        else:
            enum_cols, enum_complete = all_columns(inst, cfg.enumeration_limit)
    result = ColgenResult(ColgenReport(None, False, None, 0, 0, 0.0, "heuristic"), pool, cgc=cgc, subsets=subsets)
    big_m = default_big_m(inst)
    escalations = 0
    warm: Optional[LpBasis] = None
    iters = 0
    certified = False
    status = None
    sol = None
    rmp = None
    while True:
        if time.perf_counter() - start >= cfg.time_limit:
            status = "time-limit"
            break
        if iters >= cfg.max_iters:
            status = "iteration-limit"
            break
        iters += 1
        rmp = build_rmp(pool, inst, cgc, subsets, big_m)
        sol = solve_rmp(rmp, cfg.lp_method, warm)
        if not sol.optimal:
            raise RuntimeError(f"restricted master LP ended with status {sol.status}")
        warm = sol.basis
        if cfg.check_duality:
            result.duality_checks += 1
            if not lp_strong_duality_check(rmp.problem, sol):
                result.duality_failures += 1
        result.rmp_values.append(sol.objective)
        duals = extract_duals(rmp, sol, inst.n)
        found = [p for p in heuristic_pricing(inst, duals, cgc, subsets) if p.column.nodes not in seen]
        if not found and enum_cols is not None:
            ex = exact_pricing(inst, duals, cgc=cgc, subsets=subsets, columns=enum_cols)
            found = [p for p in ex.negatives if p.column.nodes not in seen]
            if not found:
                if ex.negatives:
                    raise RuntimeError("exact pricing returned only pooled columns; duals are inconsistent")
                certified = enum_complete
        if not found:
            art = float(np.sum(sol.x[: rmp.n_art]))
            if art > ART_TOL and escalations < cfg.big_m_escalations:
                # a bigger penalty may push the artificials out; prices change, so keep going
                big_m *= 10
                escalations += 1
                warm = None
                continue
            break
        for p in found[: cfg.columns_per_iter]:
            pool.append(p.column)
            seen.add(p.column.nodes)
    result.pool = pool
    result.final_duals = extract_duals(rmp, sol, inst.n) if sol is not None else None
    art = float(np.sum(sol.x[: rmp.n_art])) if sol is not None else 0.0
    result.artificial_level = art
    value = sol.objective if sol is not None else None
    report = result.report
    report.iters = iters
    report.columns = len(pool)
    report.certified = certified and art <= ART_TOL
    report.pricing = pricing_mode
    if report.certified:
        report.lp_bound = value
    else:
        report.heuristic_lp = value
    if art > ART_TOL and status is None:
        status = "possibly-infeasible"
        if enum_cols is not None and enum_complete:
            level, checks, failures = phase_one(inst, pool, enum_cols, cgc, subsets, cfg.lp_method, cfg.check_duality)
            result.phase_one = level
            result.duality_checks += checks
            result.duality_failures += failures
            if level > ART_TOL:
                status = "infeasible"
    if status is None:
        left = max(cfg.time_limit - (time.perf_counter() - start), 1e-3)
        fin = final_ip(pool, inst, cgc, subsets, BnbConfig(time_limit=left, check_duality=cfg.check_duality))
        result.duality_checks += fin.duality_checks
        result.duality_failures += fin.duality_failures
        report.obj = fin.obj
        result.partition = fin.partition
        if fin.status == "optimal":
            # integral costs: the pool optimum is proven only when it meets the rounded-up LP bound
            proven = report.certified and fin.obj <= math.ceil(report.lp_bound - 1e-6) + 1e-9
            status = "optimal" if proven else "heuristic"
        else:
            status = fin.status
    report.status = status
    report.time_s = round(time.perf_counter() - start, 6)
    return result


def phase_one(
    inst: Instance,
    pool: Sequence[Column],
    candidates: Sequence[Column],
    cgc: Sequence[CgcRow] = (),
    subsets: Sequence[SubsetRow] = (),
    method: str = "simplex",
    check_duality: bool = True,
) -> tuple[float, int, int]:
    """Minimum total artificial level of the master LP over ``candidates``.

    Real columns cost nothing and artificials cost one, and pricing runs over
    the complete candidate list, so a positive result proves the LP relaxation
    (hence the instance) infeasible.  Returns (level, duality checks, failures).
    """
    free = {c.nodes: Column(c.nodes, 0) for c in pool}
    zero = [Column(c.nodes, 0) for c in candidates]
    checks = failures = 0
    while True:
        rmp = build_rmp(list(free.values()), inst, cgc, subsets, big_m=1.0)
        sol = solve_rmp(rmp, method)
        if not sol.optimal:
            raise RuntimeError(f"phase-one master LP ended with status {sol.status}")
        if check_duality:
            checks += 1
            failures += not lp_strong_duality_check(rmp.problem, sol)
        duals = extract_duals(rmp, sol, inst.n)
        ex = exact_pricing(inst, duals, cgc=cgc, subsets=subsets, columns=zero)
        new = [p.column for p in ex.negatives if p.column.nodes not in free]
        if not new:
            return max(sol.objective, 0.0), checks, failures
        for col in new[:200]:
            free[col.nodes] = col


# --------------------------------------------------------------------------- final IP


@dataclass
class FinalIp:
    status: str  # optimal | pool-infeasible | time-limit | no-incumbent
    obj: Optional[float]
    partition: Optional[list[NodeSet]]
    nodes: int = 0
    duality_checks: int = 0
    duality_failures: int = 0


def set_partition_model(pool: Sequence[Column], inst: Instance, cgc: Sequence[CgcRow] = (), subsets: Sequence[SubsetRow] = ()) -> MilpModel:
    m = MilpModel(kind="m3", instance=inst)
    for t, col in enumerate(pool):
        m.add_var(("z", t), 0.0, 1.0, True, float(col.cost))
    for i in range(inst.n):
        m.add_row({t: 1 for t, col in enumerate(pool) if col.covers(i)}, "=", 1, "cover")
    m.add_row({t: 1 for t in range(len(pool))}, "=", inst.k, "convexity")
    for row in cgc:
        m.add_row({t: 1 for t, col in enumerate(pool) if col.size >= row.ell}, "<", row.rhs, "cgc")
    for row in subsets:
        m.add_row({t: 1 for t, col in enumerate(pool) if row.applies(col)}, "<", row.rhs, "subset")
    return m


def final_ip(
    pool: Sequence[Column],
    inst: Instance,
    cgc: Sequence[CgcRow] = (),
    subsets: Sequence[SubsetRow] = (),
    config: Optional[BnbConfig] = None,
) -> FinalIp:
    """Binary set partitioning restricted to ``pool`` (price-and-branch)."""
    pool = list(pool)
    if any(not any(c.covers(i) for c in pool) for i in range(inst.n)):
        return FinalIp("pool-infeasible", None, None)
    m = set_partition_model(pool, inst, cgc, subsets)
    res = bnb_solve(m, config=config or BnbConfig())
    if res.incumbent is None:
        status = "pool-infeasible" if res.report.status == "infeasible" else res.report.status
        return FinalIp(status, None, None, res.report.nodes, res.duality_checks, res.duality_failures)
    chosen = sorted(pool[t].nodes for t in range(len(pool)) if res.incumbent[t] > 0.5)
    status = "optimal" if res.report.status == "optimal" else res.report.status
    return FinalIp(status, res.report.obj, chosen, res.report.nodes, res.duality_checks, res.duality_failures)


def full_enumeration_lp(inst: Instance, cgc: bool = False, method: str = "highs") -> Optional[float]:
    """LP value of the master problem with every column materialised (no artificials needed)."""
    cols, _ = all_columns(inst)
    rows = cgc_rows(inst) if cgc else []
    m = set_partition_model(cols, inst, rows)
    sol = lp_solve(m.relaxation(), method=method)
    return sol.objective if sol.optimal else None


# --------------------------------------------------------------------------- pool files


def dump_pool(pool: Iterable[Column]) -> str:
    return "".join(f"{c.cost} {c.size} {','.join(map(str, c.nodes))}\n" for c in pool)


def load_pool(text: str, inst: Optional[Instance] = None) -> list[Column]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'cost size nodes'")
        cost, size = int(parts[0]), int(parts[1])
        nodes = node_set(int(v) for v in parts[2].split(","))
        if len(nodes) != size:
            raise ValueError(f"line {lineno}: size {size} does not match {len(nodes)} nodes")
        col = Column(nodes, cost)
        if inst is not None:
            col = make_column(inst, nodes)
            if col.cost != cost:
                raise ValueError(f"line {lineno}: cost {cost} differs from the induced cost {col.cost}")
        out.append(col)
    return out
