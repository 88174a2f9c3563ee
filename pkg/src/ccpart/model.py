"""Mixed-integer models: a small sparse MILP container, the two flow formulations,
an exact evaluator and a fixed-format MPS writer/reader."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph
from .instance import Instance, precheck
from .lp import EQ, GE, LE, LpProblem

Key = tuple  # semantic variable name, e.g. ("y", i, c)


class InfeasibleInstanceError(ValueError):
    """Raised when a builder is asked to model an instance the precheck rejects."""


@dataclass
class Row:
    coefs: dict[int, float]
    sense: str
    rhs: float
    name: str = ""

    def activity(self, x: Mapping[int, float] | np.ndarray) -> float:
        return sum(a * x[j] for j, a in self.coefs.items())

    def violation(self, x) -> float:
        act = self.activity(x)
        if self.sense == LE:
            return max(0.0, act - self.rhs)
        if self.sense == GE:
            return max(0.0, self.rhs - act)
        return abs(act - self.rhs)


class VarIndex:
    """Bidirectional map between semantic keys and variable ids."""

    def __init__(self) -> None:
        self._ids: dict[Key, int] = {}
        self._keys: list[Key] = []

    def add(self, key: Key) -> int:
        if key in self._ids:
            raise KeyError(f"duplicate variable {key}")
        self._ids[key] = len(self._keys)
        self._keys.append(key)
        return self._ids[key]

    def __getitem__(self, key: Key) -> int:
        return self._ids[key]

    def get(self, key: Key, default=None):
        return self._ids.get(key, default)

    def __contains__(self, key: Key) -> bool:
        return key in self._ids

    def __len__(self) -> int:
        return len(self._keys)

    def key(self, var: int) -> Key:
        return self._keys[var]

    def keys(self) -> list[Key]:
        return list(self._keys)

    def of_kind(self, kind: str) -> list[int]:
        return [j for j, k in enumerate(self._keys) if k[0] == kind]

    @staticmethod
    def label(key: Key) -> str:
        return f"{key[0]}[{','.join(map(str, key[1:]))}]"


@dataclass
class MilpModel:
    """min c.x subject to sparse rows, bounds and integrality (minimisation only)."""

    index: VarIndex = field(default_factory=VarIndex)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    integer: list[bool] = field(default_factory=list)
    obj: list[float] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    kind: str = ""
    instance: Optional[Instance] = None

    def add_var(self, key: Key, lb: float = 0.0, ub: float = math.inf, integer: bool = False, obj: float = 0.0) -> int:
        if lb > ub:
            raise ValueError(f"bounds of {key} are inconsistent")
        j = self.index.add(key)
        self.lb.append(lb)
        self.ub.append(ub)
        self.integer.append(integer)
        self.obj.append(obj)
        return j

    def add_row(self, coefs: Mapping[int, float], sense: str, rhs: float, name: str = "") -> int:
        if sense not in (LE, EQ, GE):
            raise ValueError(f"unknown sense {sense!r}")
        clean = {}
        for j, a in coefs.items():
            if not 0 <= j < self.num_vars:
                raise IndexError(f"row references unknown variable {j}")
            if a != 0:
                clean[j] = clean.get(j, 0) + a
        self.rows.append(Row(clean, sense, rhs, name))
        return len(self.rows) - 1

    @property
    def num_vars(self) -> int:
        return len(self.obj)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def copy(self) -> "MilpModel":
        clone = MilpModel(
            index=self.index,  # keys never change after building
            lb=list(self.lb),
            ub=list(self.ub),
            integer=list(self.integer),
            obj=list(self.obj),
            rows=[Row(dict(r.coefs), r.sense, r.rhs, r.name) for r in self.rows],
            kind=self.kind,
            instance=self.instance,
        )
        return clone

    def matrix(self) -> sp.csr_matrix:
        data, idx, ptr = [], [], [0]
        for r in self.rows:
            for j in sorted(r.coefs):
                idx.append(j)
                data.append(float(r.coefs[j]))
            ptr.append(len(idx))
        return sp.csr_matrix((data, idx, ptr), shape=(self.num_rows, self.num_vars))

    def relaxation(self) -> LpProblem:
        return LpProblem(
            c=np.array(self.obj, dtype=float),
            A=self.matrix(),
            sense=[r.sense for r in self.rows],
            rhs=np.array([r.rhs for r in self.rows], dtype=float),
            lb=np.array(self.lb, dtype=float),
            ub=np.array(self.ub, dtype=float),
        )

    def rows_named(self, prefix: str) -> list[Row]:
        return [r for r in self.rows if r.name.startswith(prefix)]


# --------------------------------------------------------------------------- builders


def m1_capacity(beta: int) -> int:
    """Edge capacity for the aggregated multicommodity flow.

    Routing every pair of a part along one spanning tree loads a tree edge
    splitting the part into sides A and B with at most 2|A||B| <= beta^2/2 units.
    """
    return max(beta, (beta * beta) // 2)


def _check(inst: Instance, check: bool) -> None:
    if check:
        rep = precheck(inst)
        if rep.infeasible:
            raise InfeasibleInstanceError(f"instance rejected by precheck ({rep.reason})")


def build_m1(inst: Instance, check: bool = True, capacity: Optional[int] = None) -> tuple[MilpModel, VarIndex]:
    """Per-part multicommodity-flow formulation.

    Variables: y[i,c] node-in-part, x[i,j,c] edge-in-part, xbar[i,j,c] non-edge
    pair-in-part, flow[l,c,u,v] flow of commodity l (source node) of part c on
    arc (u,v).  ``capacity`` overrides the edge capacity coefficient.
    """
    _check(inst, check)
    g, k, n = inst.graph, inst.k, inst.n
    b = inst.beta
    cap = m1_capacity(b) if capacity is None else capacity
    mdl = MilpModel(kind="m1", instance=inst)
    ix = mdl.index
    for i in range(n):
        for c in range(k):
            mdl.add_var(("y", i, c), 0, 1, True)
    for (i, j), d in zip(g.edges, g.costs):
        for c in range(k):
            mdl.add_var(("x", i, j, c), 0, 1, True, obj=d)
    non_edges = g.non_edges()
    for i, j in non_edges:
        for c in range(k):
            mdl.add_var(("xbar", i, j, c), 0, 1, True)
    for i, j in g.edges:
        for l in range(n):
            for c in range(k):
                mdl.add_var(("flow", l, c, i, j), 0, b)
                mdl.add_var(("flow", l, c, j, i), 0, b)

    for i in range(n):
        mdl.add_row({ix["y", i, c]: 1 for c in range(k)}, EQ, 1, "assign")
    for i, j in g.edges:
        for c in range(k):
            yi, yj, x = ix["y", i, c], ix["y", j, c], ix["x", i, j, c]
            mdl.add_row({yi: 1, yj: 1, x: -1}, LE, 1, "link_le")
            mdl.add_row({yi: 1, yj: 1, x: -2}, GE, 0, "link_ge")
    for i, j in non_edges:
        for c in range(k):
            yi, yj, x = ix["y", i, c], ix["y", j, c], ix["xbar", i, j, c]
            mdl.add_row({yi: 1, yj: 1, x: -1}, LE, 1, "pair_le")
            mdl.add_row({yi: 1, yj: 1, x: -2}, GE, 0, "pair_ge")
    for i, j in g.edges:
        for c in range(k):
            coefs = {}
            for l in range(n):
                coefs[ix["flow", l, c, i, j]] = 1
                coefs[ix["flow", l, c, j, i]] = 1
            coefs[ix["x", i, j, c]] = -cap
            mdl.add_row(coefs, LE, 0, "capacity")

    def xbar(u: int, v: int, c: int) -> int:
        return ix["xbar", min(u, v), max(u, v), c]

    for l in range(n):
        far = [v for v in range(n) if v != l and not g.has_edge(l, v)]
        for c in range(k):
            for j in range(n):
                coefs: dict[int, float] = {}
                for u in g.neighbors(j):
                    coefs[ix["flow", l, c, u, j]] = coefs.get(ix["flow", l, c, u, j], 0) + 1
                    coefs[ix["flow", l, c, j, u]] = coefs.get(ix["flow", l, c, j, u], 0) - 1
                # inflow - outflow = demand; demand terms moved to the left-hand side
                if j == l:
                    for v in far:
                        coefs[xbar(l, v, c)] = 1
                elif not g.has_edge(l, j):
                    coefs[xbar(l, j, c)] = -1
                mdl.add_row(coefs, EQ, 0, "conserve")
    for c in range(k):
        mdl.add_row({ix["y", i, c]: 1 for i in range(n)}, GE, inst.alpha, "size")
    return mdl, ix


def build_m2(inst: Instance, check: bool = True) -> tuple[MilpModel, VarIndex]:
    """Single-commodity flow formulation on the k-augmented graph.

    Artificial node ``n + c`` roots part c.  Real edges carry x[i,j] and flows in
    both directions; artificial edges carry x[n+c,j] and an outbound flow only.
    """
    _check(inst, check)
    g, k, n = inst.graph, inst.k, inst.n
    b = inst.beta
    mdl = MilpModel(kind="m2", instance=inst)
    ix = mdl.index
    for i in range(n):
        for c in range(k):
            mdl.add_var(("y", i, c), 0, 1, True)
    for (i, j), d in zip(g.edges, g.costs):
        mdl.add_var(("x", i, j), 0, 1, True, obj=d)
    for c in range(k):
        for j in range(n):
            mdl.add_var(("x", n + c, j), 0, 1, True)
    for i, j in g.edges:
        mdl.add_var(("f", i, j), 0, b)
        mdl.add_var(("f", j, i), 0, b)
    for c in range(k):
        for j in range(n):
            mdl.add_var(("f", n + c, j), 0, b)

    for i in range(n):
        mdl.add_row({ix["y", i, c]: 1 for c in range(k)}, EQ, 1, "assign")
    for i, j in g.edges:
        for c in range(k):
            mdl.add_row({ix["y", i, c]: 1, ix["y", j, c]: 1, ix["x", i, j]: -1}, LE, 1, "link")
    for i, j in g.edges:
        for c in range(k):
            for l in range(c + 1, k):
                x = ix["x", i, j]
                mdl.add_row({ix["y", i, c]: 1, ix["y", j, l]: 1, x: 1}, LE, 2, "split")
                mdl.add_row({ix["y", i, l]: 1, ix["y", j, c]: 1, x: 1}, LE, 2, "split")
    for c in range(k):
        mdl.add_row({ix["x", n + c, j]: 1 for j in range(n)}, EQ, 1, "root")
    for c in range(k):
        coefs = {ix["f", n + c, j]: 1 for j in range(n)}
        for j in range(n):
            coefs[ix["y", j, c]] = -1
        mdl.add_row(coefs, EQ, 0, "supply")
    for j in range(n):
        coefs: dict[int, float] = {ix["f", n + c, j]: 1 for c in range(k)}
        for u in g.neighbors(j):
            coefs[ix["f", u, j]] = 1
            coefs[ix["f", j, u]] = -1
        mdl.add_row(coefs, EQ, 1, "consume")
    for i, j in g.edges:
        mdl.add_row({ix["f", i, j]: 1, ix["f", j, i]: 1, ix["x", i, j]: -b}, LE, 0, "capacity")
    for c in range(k):
        for j in range(n):
            f, x = ix["f", n + c, j], ix["x", n + c, j]
            mdl.add_row({f: 1, x: -inst.alpha}, GE, 0, "root_lo")
            mdl.add_row({f: 1, x: -b}, LE, 0, "root_hi")
    return mdl, ix


def build(inst: Instance, kind: str, check: bool = True) -> tuple[MilpModel, VarIndex]:
    if kind == "m1":
        return build_m1(inst, check)
    if kind == "m2":
        return build_m2(inst, check)
    raise ValueError(f"unknown model {kind!r}")


# --------------------------------------------------------------------------- evaluation


@dataclass
class Evaluation:
    objective: Fraction
    violated: list[int]
    bound_violations: list[int]

    @property
    def feasible(self) -> bool:
        return not self.violated and not self.bound_violations


def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _integer_data(model: MilpModel):
    """int64 copies of the model data, or None if any coefficient is fractional (cached per shape)."""
    key = (model.num_vars, model.num_rows)
    cached = getattr(model, "_int_cache", None)
    if cached is not None and cached[0] == key:
        return cached[1]
    data = None
    nums = [a for r in model.rows for a in r.coefs.values()] + [r.rhs for r in model.rows] + list(model.obj)
    if all(float(v).is_integer() and abs(v) < 2**40 for v in nums):
        A = model.matrix()
        data = (
            sp.csr_matrix((A.data.astype(np.int64), A.indices, A.indptr), shape=A.shape),
            np.array([int(r.rhs) for r in model.rows], dtype=np.int64),
            np.array([r.sense for r in model.rows]),
            np.array([int(c) for c in model.obj], dtype=np.int64),
        )
    object.__setattr__(model, "_int_cache", (key, data))
    return data


def _evaluate_integral(model: MilpModel, x: np.ndarray, tol: float) -> Optional[Evaluation]:
    """Exact evaluation in integer arithmetic when the data and the point are integral."""
    if not np.all(np.isfinite(x)) or not np.all(x == np.round(x)) or np.any(np.abs(x) >= 2**40):
        return None
    data = _integer_data(model)
    if data is None:
        return None
    A, rhs, sense, obj = data
    xi = x.astype(np.int64)
    act = A @ xi
    t = math.floor(tol)  # integer activities: only whole units of tolerance matter
    bad = ((sense == LE) & (act > rhs + t)) | ((sense == GE) & (act < rhs - t)) | ((sense == EQ) & (np.abs(act - rhs) > t))
    lb, ub = np.array(model.lb), np.array(model.ub)
    bad_b = (x < lb - tol) | (x > ub + tol)
    return Evaluation(Fraction(int(obj @ xi)), [int(i) for i in np.flatnonzero(bad)], [int(j) for j in np.flatnonzero(bad_b)])


def evaluate(model: MilpModel, assignment: Mapping[int, float] | np.ndarray, tol: float = 0.0) -> Evaluation:
    """Exact (rational) objective and the rows/bounds the assignment violates.

    ``assignment`` maps every variable id to a value (or is a full vector).
    ``tol`` relaxes row and bound checks; 0 means exact.
    """
    n = model.num_vars
    if isinstance(assignment, np.ndarray):
        if len(assignment) != n:
            raise ValueError("assignment vector has the wrong length")
        fast = _evaluate_integral(model, assignment, tol)
        if fast is not None:
            return fast
        vals = [_exact(float(v)) for v in assignment]
    else:
        missing = [j for j in range(n) if j not in assignment]
        if missing:
            raise KeyError(f"assignment misses variable {VarIndex.label(model.index.key(missing[0]))}")
        vals = [_exact(assignment[j]) for j in range(n)]
    t = _exact(tol)
    obj = sum((_exact(c) * vals[j] for j, c in enumerate(model.obj) if c), Fraction(0))
    violated = []
    for r_id, row in enumerate(model.rows):
        act = sum((_exact(a) * vals[j] for j, a in row.coefs.items()), Fraction(0))
        rhs = _exact(row.rhs)
        if (row.sense == LE and act > rhs + t) or (row.sense == GE and act < rhs - t) or (
            row.sense == EQ and abs(act - rhs) > t
        ):
            violated.append(r_id)
    bad_bounds = []
    for j, v in enumerate(vals):
        lo, hi = model.lb[j], model.ub[j]
        if (lo != -math.inf and v < _exact(lo) - t) or (hi != math.inf and v > _exact(hi) + t):
            bad_bounds.append(j)
        elif model.integer[j] and v.denominator != 1 and abs(v - round(v)) > t:
            bad_bounds.append(j)
    return Evaluation(obj, violated, bad_bounds)


# --------------------------------------------------------------------------- MPS


def _mps_number(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e11:
        return str(int(v))
    text = repr(float(v))
    if len(text) > 12:
        text = f"{v:.6e}"
    return text


def _field_line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # fixed-format columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61
    line = " " + f1.ljust(2) + " " + f2.ljust(8)
    if f3 or f4:
        line += "  " + f3.ljust(8) + "  " + f4.rjust(12)
    if f5 or f6:
        line += "   " + f5.ljust(8) + "  " + f6.rjust(12)
    return line.rstrip()


def export_mps(model: MilpModel, name: str = "CCPART") -> tuple[str, str]:
    """Fixed-format MPS text plus the sidecar name map (``code label`` per line)."""
    col = [f"C{j:07d}" for j in range(model.num_vars)]
    row = [f"R{i:07d}" for i in range(model.num_rows)]
    names = [f"{c} {VarIndex.label(model.index.key(j))}" for j, c in enumerate(col)]
    names += [f"{r} {model.rows[i].name}" for i, r in enumerate(row)]
    out = [f"NAME          {name}", "ROWS", " N  COST"]
    tag = {LE: "L", GE: "G", EQ: "E"}
    out += [f" {tag[r.sense]}  {row[i]}" for i, r in enumerate(model.rows)]
    out.append("COLUMNS")
    by_col: list[list[tuple[str, float]]] = [[] for _ in range(model.num_vars)]
    for i, r in enumerate(model.rows):
        for j in sorted(r.coefs):
            by_col[j].append((row[i], r.coefs[j]))
    in_int = False
    marker = 0
    for j in range(model.num_vars):
        if model.integer[j] != in_int:
            kind = "'INTORG'" if model.integer[j] else "'INTEND'"
            out.append(_field_line("", f"MARKER{marker:02d}", "'MARKER'", "", kind))
            marker += 1
            in_int = model.integer[j]
        entries = ([("COST", model.obj[j])] if model.obj[j] else []) + by_col[j]
        if not entries:
            entries = [("COST", 0)]
        for rname, a in entries:
            out.append(_field_line("", col[j], rname, _mps_number(a)))
    if in_int:
        out.append(_field_line("", f"MARKER{marker:02d}", "'MARKER'", "", "'INTEND'"))
    out.append("RHS")
    for i, r in enumerate(model.rows):
        if r.rhs:
            out.append(_field_line("", "RHS", row[i], _mps_number(r.rhs)))
    out.append("BOUNDS")
    for j in range(model.num_vars):
        lo, hi = model.lb[j], model.ub[j]
        if lo == -math.inf and hi == math.inf:
            out.append(_field_line("FR", "BND", col[j]))
            continue
        if lo == -math.inf:
            out.append(_field_line("MI", "BND", col[j]))
        elif lo != 0:
            out.append(_field_line("LO", "BND", col[j], _mps_number(lo)))
        if hi == math.inf:
            out.append(_field_line("PL", "BND", col[j]))
        else:
            out.append(_field_line("UP", "BND", col[j], _mps_number(hi)))
    out.append("ENDATA")
    return "\n".join(out) + "\n", "\n".join(names) + "\n"


def _parse_number(text: str) -> float:
    v = float(text)
    return int(v) if v.is_integer() and "e" not in text.lower() and "." not in text else v


def read_mps(text: str, name_map: Optional[str] = None) -> MilpModel:
    """Parse MPS written by :func:`export_mps` (whitespace-separated fields)."""
    labels: dict[str, str] = {}
    if name_map:
        for line in name_map.splitlines():
            if line.strip():
                code, label = line.split(" ", 1)
                labels[code] = label
    mdl = MilpModel()
    row_pos: dict[str, int] = {}
    col_pos: dict[str, int] = {}
    section = ""
    integer = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            continue
        f = raw.split()
        if section == "ROWS":
            sense, rname = f
            if sense == "N":
                continue
            row_pos[rname] = mdl.add_row({}, {"L": LE, "G": GE, "E": EQ}[sense], 0, labels.get(rname, ""))
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1] == "'MARKER'":
                integer = f[2] == "'INTORG'"
                continue
            cname = f[0]
            if cname not in col_pos:
                key = ("mps", labels.get(cname, cname))
                col_pos[cname] = mdl.add_var(key, 0, math.inf, integer)
            j = col_pos[cname]
            for rname, val in zip(f[1::2], f[2::2]):
                a = _parse_number(val)
                if rname == "COST":
                    mdl.obj[j] = a
                elif a:
                    mdl.rows[row_pos[rname]].coefs[j] = a
        elif section == "RHS":
            for rname, val in zip(f[1::2], f[2::2]):
                mdl.rows[row_pos[rname]].rhs = _parse_number(val)
        elif section == "BOUNDS":
            btype, cname = f[0], f[2]
            j = col_pos[cname]
            if btype == "UP":
                mdl.ub[j] = _parse_number(f[3])
            elif btype == "LO":
                mdl.lb[j] = _parse_number(f[3])
            elif btype == "FX":
                mdl.lb[j] = mdl.ub[j] = _parse_number(f[3])
            elif btype == "MI":
                mdl.lb[j] = -math.inf
            elif btype == "PL":
                mdl.ub[j] = math.inf
            elif btype == "FR":
                mdl.lb[j], mdl.ub[j] = -math.inf, math.inf
            elif btype == "BV":
                mdl.lb[j], mdl.ub[j] = 0, 1
            else:
                raise ValueError(f"line {lineno}: unsupported bound type {btype}")
        elif section not in ("NAME", "ENDATA"):
            raise ValueError(f"line {lineno}: unexpected section {section}")
    return mdl


def write_mps(model: MilpModel, path: str | os.PathLike) -> str:
    """Write ``path`` and ``path + '.names'``; returns the sidecar path."""
    text, names = export_mps(model)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    side = os.fspath(path) + ".names"
    with open(side, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(names)
    return side
