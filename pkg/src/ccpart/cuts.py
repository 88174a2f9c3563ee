"""Valid inequalities and variable fixings for the two flow formulations.

Each generator returns a :class:`CutSet` holding rows (on model variable ids)
and fixings.  Family tags double as the CLI vocabulary.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence

from .graph import (
    Graph,
    all_hop_distances,
    articulation_nodes,
    boundary,
    components,
    cut_edges,
    is_separator,
    maximal_cliques,
    node_set,
)
from .instance import Instance, distant_set
from .lp import EQ, GE, LE
from .model import InfeasibleInstanceError, MilpModel, Row, VarIndex

log = logging.getLogger(__name__)

FAMILIES = ("lc", "spc", "lset", "ngh", "sc", "art", "sep", "lbc", "clq")

CLIQUE_SIZE_CAP = 20
CLIQUE_COUNT_CAP = 100_000


@dataclass
class CutSet:
    family: str
    rows: list[Row] = field(default_factory=list)
    fixings: dict[int, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    infeasible_witness: tuple = ()

    def __len__(self) -> int:
        return len(self.rows) + len(self.fixings)

    def fix(self, var: int, value: float) -> None:
        old = self.fixings.get(var)
        if old is not None and old != value:
            raise InfeasibleInstanceError(f"{self.family}: contradictory fixings on variable {var}")
        self.fixings[var] = value


def edge_vars(inst: Instance, ix: VarIndex, kind: str, i: int, j: int) -> list[int]:
    i, j = min(i, j), max(i, j)
    if kind == "m1":
        return [ix["x", i, j, c] for c in range(inst.k)]
    return [ix["x", i, j]]


def x_aggregate(inst: Instance, ix: VarIndex, kind: str, values) -> list[float]:
    """Per-edge value summed over parts (M1) or the single edge variable (M2)."""
    return [sum(values[v] for v in edge_vars(inst, ix, kind, i, j)) for i, j in inst.graph.edges]


# --------------------------------------------------------------------------- LC


def leaf_cuts(inst: Instance, ix: VarIndex, kind: str) -> CutSet:
    """A leaf's only edge is always inside a part, and it never forwards flow."""
    g = inst.graph
    out = CutSet("lc")
    for i in range(g.n):
        if g.degree(i) != 1:
            continue
        r = g.neighbors(i)[0]
        out.notes.append(f"leaf {i} -> {r}")
        if kind == "m1":
            out.rows.append(Row({v: 1 for v in edge_vars(inst, ix, kind, i, r)}, EQ, 1, "lc"))
            # the leaf's own commodity leaves through (i, r); every other one cannot
            for c in range(inst.k):
                for l in range(g.n):
                    if l != i:
                        out.fix(ix["flow", l, c, i, r], 0)
        else:
            out.fix(ix["x", min(i, r), max(i, r)], 1)
            if g.degree(r) > 1:
                out.fix(ix["f", r, i], 1)
                out.fix(ix["f", i, r], 0)
    return out


# --------------------------------------------------------------------------- SPC / L-set / NGH


def spc_cuts(inst: Instance, ix: VarIndex, kind: str = "m1", dist=None) -> CutSet:
    """Nodes at least beta hops apart never share a part."""
    dist = dist if dist is not None else all_hop_distances(inst.graph)
    out = CutSet("spc")
    for i, j in combinations(range(inst.n), 2):
        if dist[i][j] >= inst.beta:
            for c in range(inst.k):
                out.rows.append(Row({ix["y", i, c]: 1, ix["y", j, c]: 1}, LE, 1, "spc"))
    return out


@dataclass
class LSet:
    nodes: tuple[int, ...]
    anchored: list[list[int]]  # per L member: qualifying neighbours


def lset(inst: Instance, dist=None) -> LSet:
    g = inst.graph
    dist = dist if dist is not None else all_hop_distances(g)
    L = distant_set(inst, dist)
    anchored = []
    for i, li in enumerate(L):
        others = [v for v in L if v != li]
        anchored.append([u for u in g.neighbors(li) if all(dist[u][v] >= inst.beta for v in others)])
    return LSet(L, anchored)


def lset_fixings(inst: Instance, ix: VarIndex, kind: str, dist=None) -> CutSet:
    """Pin pairwise-distant nodes to distinct parts (and their exclusive neighbours).

    When the greedy set has more than k members the result carries the set as
    an infeasibility witness instead of fixings.
    """
    g, k = inst.graph, inst.k
    ls = lset(inst, dist)
    L, q = ls.nodes, len(ls.nodes)
    out = CutSet("lset")
    if q > k:
        out.infeasible_witness = L
        out.notes.append(f"{q} nodes pairwise >= beta apart but only {k} parts")
        return out
    if q <= 1:
        return out
    for i, li in enumerate(L):
        for c in range(k):
            out.fix(ix["y", li, c], 1 if c == i else 0)
        for u in ls.anchored[i]:
            for j in range(q):
                if j == i:
                    continue
                out.fix(ix["y", u, j], 0)
                if kind == "m1":
                    for w in g.neighbors(u):
                        out.fix(ix["x", min(u, w), max(u, w), j], 0)
            if q == k:
                out.fix(ix["y", u, i], 1)
                if kind == "m1":
                    out.fix(ix["x", min(u, li), max(u, li), i], 1)
                else:
                    out.fix(ix["x", min(u, li), max(u, li)], 1)
        out.notes.append(f"part {i} anchored at {li}")
    return out


def neighborhood_growth_cut(g: Graph, ix: VarIndex, U: Iterable[int], part: int, alpha: int) -> CutSet:
    """A part holding fewer than alpha pinned nodes must take one of their neighbours."""
    U = node_set(U)
    if not U:
        raise ValueError("pinned set must be nonempty")
    if len(U) >= alpha:
        raise ValueError(f"pinned set already has {len(U)} >= alpha={alpha} nodes")
    frontier = boundary(g, U)
    out = CutSet("ngh", notes=[f"part {part} pinned {U}"])
    out.rows.append(Row({ix["y", j, part]: 1 for j in frontier}, GE, 1, "ngh"))
    return out


def ngh_cuts(inst: Instance, ix: VarIndex, kind: str, dist=None) -> CutSet:
    """Growth rows for the parts anchored by the L-set (same part labelling)."""
    ls = lset(inst, dist)
    L, q = ls.nodes, len(ls.nodes)
    out = CutSet("ngh")
    if q > inst.k or q <= 1:
        return out
    for i, li in enumerate(L):
        U = [li] + (ls.anchored[i] if q == inst.k else [])
        if len(U) < inst.alpha:
            cs = neighborhood_growth_cut(inst.graph, ix, U, i, inst.alpha)
            out.rows += cs.rows
            out.notes += cs.notes
    return out


# --------------------------------------------------------------------------- S-C


def size_cut(inst: Instance, ix: VarIndex, kind: str, S: Iterable[int]) -> CutSet:
    S = node_set(S)
    if not S:
        raise ValueError("size cut needs a nonempty set")
    if len(S) >= inst.alpha:
        raise ValueError(f"|S|={len(S)} is not below alpha={inst.alpha}")
    coefs: dict[int, float] = {}
    for e in cut_edges(inst.graph, S):
        i, j = inst.graph.edges[e]
        for v in edge_vars(inst, ix, kind, i, j):
            coefs[v] = 1
    return CutSet("sc", [Row(coefs, GE, 1, "sc")], notes=[f"S={S}"])


def separate_size_cuts(inst: Instance, ix: VarIndex, kind: str, values, tol: float = 1e-6) -> list[tuple[int, ...]]:
    """Small components of the support graph (edges with aggregate x >= 0.5) whose cut row is violated."""
    g = inst.graph
    agg = x_aggregate(inst, ix, kind, values)
    support = Graph(g.n, tuple(e for e, v in zip(g.edges, agg) if v >= 0.5))
    found = []
    for comp in components(support):
        if len(comp) >= inst.alpha:
            continue
        row = size_cut(inst, ix, kind, comp).rows[0]
        if row.activity(values) < 1 - tol:
            found.append(comp)
    return found


def sc_cuts(inst: Instance, ix: VarIndex, kind: str) -> CutSet:
    """Static part of the family: every singleton (alpha >= 2 makes them all valid)."""
    out = CutSet("sc")
    for i in range(inst.n):
        out.rows += size_cut(inst, ix, kind, [i]).rows
    return out


# --------------------------------------------------------------------------- ART / SEP


def _yrows(inst: Instance, ix: VarIndex, i: int, j: int, S: Sequence[int], family: str) -> list[Row]:
    rows = []
    for c in range(inst.k):
        coefs = {ix["y", i, c]: 1, ix["y", j, c]: 1}
        for l in S:
            coefs[ix["y", l, c]] = -1
        rows.append(Row(coefs, LE, 1, family))
    return rows


def _articulation_pairs(g: Graph, full: bool) -> list[tuple[int, int, int]]:
    out = []
    comp_of = {}
    for comp in components(g):
        for v in comp:
            comp_of[v] = comp
    for l in articulation_nodes(g):
        parts = components(g, within=set(comp_of[l]) - {l})
        for A, B in combinations(parts, 2):
            if full:
                out += [(i, j, l) for i in A for j in B]
            else:
                out.append((A[0], B[0], l))
    return out


def articulation_cuts(inst: Instance, ix: VarIndex, kind: str = "m1", full: bool = False) -> CutSet:
    """Nodes on two sides of a cut vertex share a part only together with it."""
    out = CutSet("art")
    for i, j, l in _articulation_pairs(inst.graph, full):
        out.rows += _yrows(inst, ix, i, j, [l], "art")
        out.notes.append(f"({i},{j}) through {l}")
    return out


def separator_cut(inst: Instance, ix: VarIndex, i: int, j: int, S: Iterable[int]) -> CutSet:
    S = node_set(S)
    if not is_separator(inst.graph, i, j, S):
        raise ValueError(f"{S} does not separate {i} from {j}")
    return CutSet("sep", _yrows(inst, ix, i, j, S, "sep"), notes=[f"({i},{j}) by {S}"])


def minimize_separator(g: Graph, i: int, j: int, S: Iterable[int]) -> tuple[int, ...]:
    """Greedily drop nodes (lowest id first) while the set still separates."""
    cur = list(node_set(S))
    for l in list(cur):
        trial = [v for v in cur if v != l]
        if is_separator(g, i, j, trial):
            cur = trial
    return tuple(cur)


def separator_candidates(g: Graph) -> list[tuple[int, int, tuple[int, ...]]]:
    comp_id = {}
    for t, comp in enumerate(components(g)):
        for v in comp:
            comp_id[v] = t
    seen = set()
    out = []
    for i, j in combinations(range(g.n), 2):
        if g.has_edge(i, j) or comp_id[i] != comp_id[j]:
            continue
        S = minimize_separator(g, i, j, g.neighbors(i))
        if (i, j, S) not in seen:
            seen.add((i, j, S))
            out.append((i, j, S))
    for i, j, l in _articulation_pairs(g, False):
        if g.has_edge(i, j):
            continue
        key = (i, j, (l,))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def sep_cuts(inst: Instance, ix: VarIndex, kind: str = "m1") -> CutSet:
    out = CutSet("sep")
    for i, j, S in separator_candidates(inst.graph):
        cs = separator_cut(inst, ix, i, j, S)
        out.rows += cs.rows
        out.notes += cs.notes
    return out


# --------------------------------------------------------------------------- LBC / CLQ


def lower_bound_cut(inst: Instance, ix: VarIndex, kind: str) -> CutSet:
    """Each part is connected, so it keeps at least |part| - 1 edges: n - k in total."""
    coefs = {}
    for i, j in inst.graph.edges:
        for v in edge_vars(inst, ix, kind, i, j):
            coefs[v] = 1
    return CutSet("lbc", [Row(coefs, GE, inst.n - inst.k, "lbc")])


def clique_rhs(size: int, k: int) -> int:
    q = size - k
    if k == 2:
        h = size // 2
        return max(h * (h - 1), q)
    return q


def clique_cuts(inst: Instance, ix: VarIndex, kind: str, size_cap: int = CLIQUE_SIZE_CAP,
                count_cap: int = CLIQUE_COUNT_CAP) -> CutSet:
    g = inst.graph
    out = CutSet("clq")
    skipped = 0
    for C in maximal_cliques(g, count_cap):
        if len(C) <= inst.k:
            continue
        if len(C) > size_cap:
            skipped += 1
            continue
        coefs = {}
        for i, j in combinations(C, 2):
            for v in edge_vars(inst, ix, kind, i, j):
                coefs[v] = 1
        out.rows.append(Row(coefs, GE, clique_rhs(len(C), inst.k), "clq"))
        out.notes.append(f"clique {C}")
    if skipped:
        log.warning("skipped %d cliques larger than %d nodes", skipped, size_cap)
    return out


# --------------------------------------------------------------------------- registry


def parse_tags(text: str | Sequence[str] | None) -> list[str]:
    if not text:
        return []
    items = text.split(",") if isinstance(text, str) else list(text)
    tags = [t.strip().lower().replace("-", "") for t in items if t.strip()]
    tags = [t for t in tags if t != "none"]
    for t in tags:
        if t not in FAMILIES and t != "cgc":
            raise ValueError(f"unknown cut family {t!r}")
    return tags


def generate(inst: Instance, ix: VarIndex, kind: str, tags: Iterable[str], art_full: bool = False) -> list[CutSet]:
    """Static cut sets for the requested families (``sc`` adds singleton rows; the
    rest of that family is separated lazily during branch-and-bound)."""
    dist = None
    out = []
    for tag in tags:
        if tag in ("spc", "lset", "ngh") and dist is None:
            dist = all_hop_distances(inst.graph)
        if tag == "lc":
            out.append(leaf_cuts(inst, ix, kind))
        elif tag == "spc":
            out.append(spc_cuts(inst, ix, kind, dist))
        elif tag == "lset":
            out.append(lset_fixings(inst, ix, kind, dist))
        elif tag == "ngh":
            out.append(ngh_cuts(inst, ix, kind, dist))
        elif tag == "sc":
            out.append(sc_cuts(inst, ix, kind))
        elif tag == "art":
            out.append(articulation_cuts(inst, ix, kind, art_full))
        elif tag == "sep":
            out.append(sep_cuts(inst, ix, kind))
        elif tag == "lbc":
            out.append(lower_bound_cut(inst, ix, kind))
        elif tag == "clq":
            out.append(clique_cuts(inst, ix, kind))
        else:
            raise ValueError(f"cut family {tag!r} does not apply to {kind}")
    return out


def apply_cuts(model: MilpModel, cutsets: Iterable[CutSet]) -> MilpModel:
    """Copy of ``model`` with the rows appended and the fixings turned into bounds."""
    out = model.copy()
    for cs in cutsets:
        if cs.infeasible_witness:
            raise InfeasibleInstanceError(f"{cs.family}: infeasibility witness {cs.infeasible_witness}")
        for row in cs.rows:
            out.add_row(row.coefs, row.sense, row.rhs, row.name or cs.family)
        for var, val in cs.fixings.items():
            lo, hi = max(out.lb[var], val), min(out.ub[var], val)
            if lo > hi:
                raise InfeasibleInstanceError(f"{cs.family}: fixing {var}={val} conflicts with its bounds")
            out.lb[var], out.ub[var] = lo, hi
    return out
