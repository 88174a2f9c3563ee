"""Undirected edge-weighted graphs and the combinatorial primitives used by the solvers.

Nodes are dense 0-based integers.  Every function here is pure; a ``Graph`` is
immutable once built, so instances can be shared freely between threads.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence

INF = math.inf

NodeSet = tuple[int, ...]


def node_set(nodes: Iterable[int]) -> NodeSet:
    """Canonical (sorted, duplicate-free) form of a node collection."""
    return tuple(sorted(set(nodes)))


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple[tuple[int, int], ...]
    costs: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        edges = tuple((min(i, j), max(i, j)) for i, j in self.edges)
        costs = tuple(self.costs) if self.costs else (1,) * len(edges)
        if len(costs) != len(edges):
            raise ValueError(f"{len(edges)} edges but {len(costs)} costs")
        seen = set()
        for (i, j), d in zip(edges, costs):
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if i < 0 or j >= self.n:
                raise ValueError(f"edge {{{i},{j}}} has an endpoint outside 0..{self.n - 1}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge {{{i},{j}}}")
            if d < 0:
                raise ValueError(f"negative cost {d} on edge {{{i},{j}}}")
            seen.add((i, j))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "costs", costs)

    @classmethod
    def from_edges(cls, n: int, weighted_edges: Iterable[Sequence[int]]) -> "Graph":
        """Build from ``(i, j)`` or ``(i, j, cost)`` tuples; missing costs default to 1."""
        edges, costs = [], []
        for e in weighted_edges:
            edges.append((e[0], e[1]))
            costs.append(e[2] if len(e) > 2 else 1)
        return cls(n, tuple(edges), tuple(costs))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def edge_id(self) -> dict[tuple[int, int], int]:
        return {e: idx for idx, e in enumerate(self.edges)}

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.adjacency[i]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edge_id

    def cost(self, i: int, j: int) -> int:
        return self.costs[self.edge_id[min(i, j), max(i, j)]]

    def non_edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if not self.has_edge(i, j)]

    def total_cost(self) -> int:
        return sum(self.costs)


def hop_distances(g: Graph, source: int) -> list[float]:
    """BFS hop counts from ``source``; unreachable nodes get ``inf``."""
    if not 0 <= source < g.n:
        raise ValueError(f"source {source} not in graph")
    dist: list[float] = [INF] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] == INF:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def all_hop_distances(g: Graph) -> list[list[float]]:
    return [hop_distances(g, s) for s in range(g.n)]


def _reach(g: Graph, start: int, allowed: set[int] | frozenset[int]) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in g.adjacency[u]:
            if v in allowed and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def is_connected(g: Graph, s: Iterable[int]) -> bool:
    """True iff the subgraph induced by ``s`` is connected."""
    nodes = set(s)
    if not nodes:
        raise ValueError("connectivity of the empty set is undefined")
    return len(_reach(g, next(iter(nodes)), nodes)) == len(nodes)


def components(g: Graph, within: Iterable[int] | None = None) -> list[NodeSet]:
    """Connected components of the induced subgraph, ordered by smallest node."""
    remaining = set(range(g.n)) if within is None else set(within)
    allowed = frozenset(remaining)
    out = []
    for v in sorted(remaining):
        if v in remaining:
            comp = _reach(g, v, allowed)
            remaining -= comp
            out.append(node_set(comp))
    return out


def articulation_nodes(g: Graph) -> NodeSet:
    """Cut vertices, found per connected component with an iterative DFS (Hopcroft-Tarjan)."""
    disc = [-1] * g.n
    low = [0] * g.n
    result = set()
    timer = 0
    for root in range(g.n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        root_children = 0
        stack = [(root, -1, iter(g.adjacency[root]))]
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v in it:
                if disc[v] == -1:
                    disc[v] = low[v] = timer
                    timer += 1
                    if u == root:
                        root_children += 1
                    stack.append((v, u, iter(g.adjacency[v])))
                    advanced = True
                    break
                if v != parent:
                    low[u] = min(low[u], disc[v])
            if advanced:
                continue
            stack.pop()
            if parent != -1:
                low[parent] = min(low[parent], low[u])
                if parent != root and low[u] >= disc[parent]:
                    result.add(parent)
        if root_children > 1:
            result.add(root)
    return node_set(result)


def is_separator(g: Graph, i: int, j: int, s: Iterable[int]) -> bool:
    """True iff deleting ``s`` leaves ``i`` and ``j`` in different components."""
    sep = set(s)
    if i == j:
        raise ValueError("separator endpoints must differ")
    if g.has_edge(i, j):
        raise ValueError(f"nodes {i} and {j} are adjacent; no separator exists")
    if i in sep or j in sep:
        raise ValueError("separator must not contain its endpoints")
    allowed = frozenset(range(g.n)) - sep
    return j not in _reach(g, i, allowed)


def induced_edge_cost(g: Graph, s: Iterable[int]) -> int:
    nodes = set(s)
    return sum(d for (i, j), d in zip(g.edges, g.costs) if i in nodes and j in nodes)


def induced_edges(g: Graph, s: Iterable[int]) -> list[int]:
    """Edge ids with both endpoints in ``s``."""
    nodes = set(s)
    return [idx for idx, (i, j) in enumerate(g.edges) if i in nodes and j in nodes]


def cut_edges(g: Graph, s: Iterable[int]) -> list[int]:
    """Edge ids of delta(s): exactly one endpoint inside ``s``."""
    nodes = set(s)
    return [idx for idx, (i, j) in enumerate(g.edges) if (i in nodes) != (j in nodes)]


def boundary(g: Graph, s: Iterable[int]) -> NodeSet:
    """N(s) minus s."""
    nodes = set(s)
    return node_set(v for u in nodes for v in g.adjacency[u] if v not in nodes)


class SubsetEnumeration(NamedTuple):
    subsets: list[NodeSet]
    complete: bool


def iter_connected_subsets(g: Graph, min_size: int, max_size: int) -> Iterator[NodeSet]:
    """Yield every connected node set with size in ``[min_size, max_size]`` exactly once.

    Uses the ESU scheme: a set is grown only from its smallest node, and a new
    node enters the extension list only if it is an exclusive neighbour of the
    node just added.  That makes each set reachable along exactly one path, so no
    global seen-set is needed.
    """
    if not 1 <= min_size <= max_size:
        raise ValueError(f"bad size range [{min_size}, {max_size}]")
    max_size = min(max_size, g.n)
    adj = g.adjacency

    def extend(sub: list[int], closed: set[int], ext: list[int], root: int) -> Iterator[NodeSet]:
        if len(sub) >= min_size:
            yield tuple(sorted(sub))
        if len(sub) == max_size:
            return
        ext = list(ext)
        while ext:
            w = ext.pop(0)
            fresh = [u for u in adj[w] if u > root and u not in closed]
            sub.append(w)
            closed.update(fresh)
            yield from extend(sub, closed, sorted(ext + fresh), root)
            closed.difference_update(fresh)
            sub.pop()

    for v in range(g.n):
        ext = [u for u in adj[v] if u > v]
        closed = set(ext) | {v}
        yield from extend([v], closed, ext, v)


def enumerate_connected_subsets(
    g: Graph, min_size: int, max_size: int, limit: int | None = None
) -> SubsetEnumeration:
    """Collect connected subsets; ``complete`` is False when ``limit`` cut the stream short."""
    out: list[NodeSet] = []
    it = iter_connected_subsets(g, min_size, max_size)
    for s in it:
        if limit is not None and len(out) >= limit:
            return SubsetEnumeration(out, False)
        out.append(s)
    return SubsetEnumeration(out, True)


def maximal_cliques(g: Graph, max_cliques: int = 100_000) -> Iterator[NodeSet]:
    """Bron-Kerbosch with Tomita pivoting; stops after ``max_cliques`` cliques."""
    adj = [set(a) for a in g.adjacency]
    count = 0
    stack = [(set(), set(range(g.n)), set())]
    while stack:
        r, p, x = stack.pop()
        if not p and not x:
            count += 1
            yield node_set(r)
            if count >= max_cliques:
                return
            continue
        if not p:
            continue
        pivot = max(p | x, key=lambda u: (len(adj[u] & p), -u))
        for v in sorted(p - adj[pivot], reverse=True):
            stack.append((r | {v}, p & adj[v], x & adj[v]))
            p = p - {v}
            x = x | {v}
