"""Translate between partitions and full variable assignments of the flow models."""

from __future__ import annotations

from collections import deque
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .graph import Graph, all_hop_distances, components, is_connected, node_set
from .instance import Instance, distant_set
from .model import VarIndex

Partition = list[tuple[int, ...]]


def canonical(blocks: Iterable[Iterable[int]]) -> Partition:
    return sorted(node_set(b) for b in blocks)


def label_blocks(inst: Instance, blocks: Sequence[Iterable[int]]) -> Partition:
    """Order blocks so block i holds the i-th L-set node (the labelling the fixings assume)."""
    blocks = canonical(blocks)
    L = _labels(inst)
    if len(L) < 2 or len(L) > inst.k:
        return blocks
    out: list[Optional[tuple[int, ...]]] = [None] * len(blocks)
    rest = []
    for b in blocks:
        hit = [i for i, l in enumerate(L) if l in b]
        if hit:
            out[hit[0]] = b
        else:
            rest.append(b)
    it = iter(rest)
    return [b if b is not None else next(it) for b in out]


@lru_cache(maxsize=256)
def _labels(inst: Instance) -> tuple[int, ...]:
    return distant_set(inst)


def _bfs_tree(g: Graph, block: Sequence[int], root: int) -> dict[int, int]:
    """Parent map of a BFS spanning tree of the induced subgraph (root maps to -1)."""
    inside = set(block)
    parent = {root: -1}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if v in inside and v not in parent:
                parent[v] = u
                queue.append(v)
    if len(parent) != len(inside):
        raise ValueError(f"block {tuple(block)} is not connected")
    return parent


def _tree_path(parent: dict[int, int], a: int, b: int) -> list[int]:
    up_a = [a]
    while parent[up_a[-1]] != -1:
        up_a.append(parent[up_a[-1]])
    pos = {v: t for t, v in enumerate(up_a)}
    up_b = [b]
    while up_b[-1] not in pos:
        up_b.append(parent[up_b[-1]])
    meet = up_b[-1]
    return up_a[: pos[meet] + 1] + list(reversed(up_b[:-1]))


def encode_m1(inst: Instance, ix: VarIndex, blocks: Partition) -> dict[int, int]:
    g, k, n = inst.graph, inst.k, inst.n
    val = {j: 0 for j in range(len(ix))}
    for c, block in enumerate(blocks):
        inside = set(block)
        for i in block:
            val[ix["y", i, c]] = 1
        for i, j in g.edges:
            if i in inside and j in inside:
                val[ix["x", i, j, c]] = 1
        for i in block:
            for j in block:
                if i < j and not g.has_edge(i, j):
                    val[ix["xbar", i, j, c]] = 1
        parent = _bfs_tree(g, block, block[0])
        for l in block:
            for j in block:
                if j == l or g.has_edge(l, j):
                    continue
                path = _tree_path(parent, l, j)
                for u, v in zip(path, path[1:]):
                    val[ix["flow", l, c, u, v]] += 1
    return val


def _m2_root(g: Graph, block: Sequence[int]) -> int:
    for v in block:
        if g.degree(v) > 1:
            return v
    return block[0]


def encode_m2(inst: Instance, ix: VarIndex, blocks: Partition) -> dict[int, int]:
    g, n = inst.graph, inst.n
    val = {j: 0 for j in range(len(ix))}
    for c, block in enumerate(blocks):
        inside = set(block)
        for i in block:
            val[ix["y", i, c]] = 1
        for i, j in g.edges:
            if i in inside and j in inside:
                val[ix["x", i, j]] = 1
        root = _m2_root(g, block)
        val[ix["x", n + c, root]] = 1
        val[ix["f", n + c, root]] = len(block)
        parent = _bfs_tree(g, block, root)
        size = {v: 1 for v in block}
        order = sorted(parent, key=lambda v: _depth(parent, v), reverse=True)
        for v in order:
            p = parent[v]
            if p != -1:
                size[p] += size[v]
                val[ix["f", p, v]] = size[v]
    return val


def _depth(parent: dict[int, int], v: int) -> int:
    d = 0
    while parent[v] != -1:
        v = parent[v]
        d += 1
    return d


def encode(inst: Instance, ix: VarIndex, kind: str, blocks: Iterable[Iterable[int]]) -> dict[int, int]:
    """Full assignment for a partition, using the L-set labelling of the parts."""
    labelled = label_blocks(inst, list(blocks))
    if len(labelled) != inst.k:
        raise ValueError(f"need exactly {inst.k} blocks, got {len(labelled)}")
    if kind == "m1":
        return encode_m1(inst, ix, labelled)
    if kind == "m2":
        return encode_m2(inst, ix, labelled)
    raise ValueError(f"unknown model {kind!r}")


def decode(inst: Instance, ix: VarIndex, values) -> list[list[int]]:
    """Part membership by the largest y value per node (ties to the lowest part)."""
    parts: list[list[int]] = [[] for _ in range(inst.k)]
    for i in range(inst.n):
        ys = [values[ix["y", i, c]] for c in range(inst.k)]
        parts[max(range(inst.k), key=lambda c: (ys[c], -c))].append(i)
    return parts


def is_valid_partition(inst: Instance, blocks: Sequence[Sequence[int]]) -> bool:
    if len(blocks) != inst.k:
        return False
    seen = [b for block in blocks for b in block]
    if sorted(seen) != list(range(inst.n)):
        return False
    return all(len(b) >= inst.alpha and is_connected(inst.graph, b) for b in blocks)


def repair(inst: Instance, parts: list[list[int]]) -> Optional[Partition]:
    """Keep each part's largest connected piece, then re-attach loose nodes greedily."""
    g = inst.graph
    owner = [-1] * inst.n
    for c, part in enumerate(parts):
        if not part:
            continue
        pieces = components(g, within=part)
        keep = max(pieces, key=lambda p: (len(p), -p[0]))
        for v in keep:
            owner[v] = c
    if len({o for o in owner if o >= 0}) < inst.k:
        return None
    loose = [v for v in range(inst.n) if owner[v] < 0]
    while loose:
        progress = False
        for v in list(loose):
            options = {}
            for u in g.neighbors(v):
                if owner[u] >= 0:
                    options[owner[u]] = options.get(owner[u], 0) + g.cost(u, v)
            if options:
                owner[v] = min(options, key=lambda c: (options[c], c))
                loose.remove(v)
                progress = True
        if not progress:
            return None
    blocks = [[v for v in range(inst.n) if owner[v] == c] for c in range(inst.k)]
    if not is_valid_partition(inst, blocks):
        return None
    return canonical(blocks)


def partition_cost(inst: Instance, blocks: Iterable[Iterable[int]]) -> int:
    g = inst.graph
    owner = {}
    for c, b in enumerate(blocks):
        for v in b:
            owner[v] = c
    return sum(d for (i, j), d in zip(g.edges, g.costs) if owner[i] == owner[j])
