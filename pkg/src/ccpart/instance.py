"""Problem instances: (graph, k, alpha), derived bounds, prechecks, generation and file I/O."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from math import comb
from typing import Optional

from .graph import Graph, all_hop_distances, components, hop_distances

MASK64 = (1 << 64) - 1


class InstanceFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Instance:
    graph: Graph
    k: int
    alpha: int

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if self.alpha < 2:
            raise ValueError(f"alpha must be at least 2, got {self.alpha}")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def beta(self) -> int:
        return beta(self)


def beta(inst: Instance) -> int:
    """Largest possible part size once the other k-1 parts take alpha nodes each."""
    return inst.n - (inst.k - 1) * inst.alpha


@dataclass(frozen=True)
class FeasibilityReport:
    status: str  # "feasible-unknown" | "infeasible"
    reason: Optional[str] = None  # "size-bound" | "too-many-components" | "distance-certificate"
    witness: tuple = field(default=())

    @property
    def infeasible(self) -> bool:
        return self.status == "infeasible"


def distant_set(inst: Instance, dist: list[list[float]] | None = None) -> tuple[int, ...]:
    """Greedy farthest-point set whose members are pairwise at least beta hops apart.

    Seeded with an endpoint of a BFS diameter pair (lowest ids on ties), then
    repeatedly adds the node maximising its minimum distance to the chosen set,
    as long as that distance is still >= beta.
    """
    g = inst.graph
    dist = dist if dist is not None else all_hop_distances(g)
    b = inst.beta
    best, seed = -1.0, 0
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if dist[i][j] > best:
                best, seed = dist[i][j], i
    chosen = [seed]
    mind = list(dist[seed])
    while True:
        cand, far = -1, -1.0
        for v in range(g.n):
            if v not in chosen and mind[v] > far:
                cand, far = v, mind[v]
        if cand < 0 or far < b:
            break
        chosen.append(cand)
        mind = [min(a, c) for a, c in zip(mind, dist[cand])]
    return tuple(chosen)


def precheck(inst: Instance) -> FeasibilityReport:
    """Necessary-condition filter; 'feasible-unknown' does not promise a solution exists."""
    if inst.k * inst.alpha > inst.n:
        return FeasibilityReport("infeasible", "size-bound", (inst.k * inst.alpha, inst.n))
    comps = components(inst.graph)
    if len(comps) > inst.k:
        return FeasibilityReport("infeasible", "too-many-components", (len(comps),))
    small = [c for c in comps if len(c) < inst.alpha]
    if small:
        return FeasibilityReport("infeasible", "size-bound", tuple(small))
    far = distant_set(inst)
    if len(far) > inst.k:
        return FeasibilityReport("infeasible", "distance-certificate", far)
    return FeasibilityReport("feasible-unknown")


def check_distance_certificate(inst: Instance, witness: tuple[int, ...]) -> bool:
    """Independent check of an L-set certificate: more than k nodes, pairwise >= beta hops."""
    if len(set(witness)) <= inst.k:
        return False
    for a in witness:
        d = hop_distances(inst.graph, a)
        if any(d[b] < inst.beta for b in witness if b != a):
            return False
    return True


class SplitMix64:
    """splitmix64 generator; the whole generator contract rests on this exact sequence."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            x = self.next()
            if x < limit:
                return x % bound

    def randint(self, low: int, high: int) -> int:
        return low + self.below(high - low + 1)


def generate(n: int, m: int, cost_low: int, cost_high: int, seed: int) -> Graph:
    """Random connected graph: random spanning tree, then distinct random extra edges."""
    if n < 1:
        raise ValueError("n must be positive")
    if not n - 1 <= m <= comb(n, 2):
        raise ValueError(f"m={m} outside [{n - 1}, {comb(n, 2)}] for n={n}")
    if cost_low > cost_high or cost_low < 0:
        raise ValueError(f"bad cost range [{cost_low}, {cost_high}]")
    rng = SplitMix64(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    edges = set()
    for i in range(1, n):
        u, v = perm[i], perm[rng.below(i)]
        edges.add((min(u, v), max(u, v)))
    rest = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
    extra = m - (n - 1)
    for t in range(extra):
        j = t + rng.below(len(rest) - t)
        rest[t], rest[j] = rest[j], rest[t]
    chosen = sorted(edges | set(rest[:extra]))
    costs = tuple(rng.randint(cost_low, cost_high) for _ in chosen)
    return Graph(n, tuple(chosen), costs)


def dumps(inst: Instance) -> str:
    g = inst.graph
    lines = [f"{g.n} {g.m} {inst.k} {inst.alpha}"]
    lines += [f"{i} {j} {d}" for (i, j), d in zip(g.edges, g.costs)]
    return "\n".join(lines) + "\n"


def loads(text: str) -> Instance:
    rows = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))
    if not rows:
        raise InstanceFormatError("empty instance file")
    lineno, head = rows[0]
    if len(head) != 4:
        raise InstanceFormatError("header must be 'n m k alpha'", lineno)
    try:
        n, m, k, alpha = map(int, head)
    except ValueError:
        raise InstanceFormatError("header fields must be integers", lineno) from None
    if len(rows) - 1 != m:
        raise InstanceFormatError(f"header declares {m} edges, found {len(rows) - 1}", lineno)
    edges, costs, seen = [], [], set()
    for lineno, fields in rows[1:]:
        if len(fields) != 3:
            raise InstanceFormatError("edge line must be 'i j cost'", lineno)
        try:
            i, j, d = map(int, fields)
        except ValueError:
            raise InstanceFormatError("edge fields must be integers", lineno) from None
        key = (min(i, j), max(i, j))
        if i == j:
            raise InstanceFormatError(f"self-loop at node {i}", lineno)
        if key in seen:
            raise InstanceFormatError(f"duplicate edge {key}", lineno)
        if not (0 <= i < n and 0 <= j < n):
            raise InstanceFormatError(f"node id out of range 0..{n - 1}", lineno)
        if d < 0:
            raise InstanceFormatError("negative edge cost", lineno)
        seen.add(key)
        edges.append(key)
        costs.append(d)
    try:
        return Instance(Graph(n, tuple(edges), tuple(costs)), k, alpha)
    except ValueError as exc:
        raise InstanceFormatError(str(exc), rows[0][0]) from None


def read_instance(path: str | os.PathLike) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def write_instance(inst: Instance, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(inst))
