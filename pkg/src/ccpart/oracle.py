"""Exhaustive ground truth for small instances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

from .graph import NodeSet, induced_edge_cost, is_connected
from .instance import Instance

NODE_CAP = 12


@dataclass
class OracleResult:
    status: str  # optimal | infeasible
    partition: Optional[list[NodeSet]]
    objective: Optional[int]
    examined: int


def restricted_growth_strings(n: int, k: int) -> Iterator[list[int]]:
    """Every labelling a[0..n-1] with a[0]=0, a[i] <= max(a[:i])+1, using exactly k labels."""
    if n == 0 or k == 0 or k > n:
        return
    a = [0] * n

    def rec(i: int, used: int) -> Iterator[list[int]]:
        if n - i < k - used:
            return
        if i == n:
            if used == k:
                yield a
            return
        for b in range(min(used + 1, k)):
            a[i] = b
            yield from rec(i + 1, max(used, b + 1))

    yield from rec(1, 1)


def stirling2(n: int, k: int) -> int:
    return sum((-1) ** j * math.comb(k, j) * (k - j) ** n for j in range(k + 1)) // math.factorial(k)


def brute_force_partition(inst: Instance, node_cap: int = NODE_CAP) -> OracleResult:
    """Minimum-cost partition into k connected blocks of size >= alpha, by full enumeration.

    Ties keep the lexicographically smallest sorted block list.
    """
    n, k, g = inst.n, inst.k, inst.graph
    if n > node_cap:
        raise ValueError(f"n={n} exceeds the oracle cap of {node_cap}")
    conn_cache: dict[NodeSet, bool] = {}
    best = None
    examined = 0
    for labels in restricted_growth_strings(n, k):
        examined += 1
        blocks = [[] for _ in range(k)]
        for v, b in enumerate(labels):
            blocks[b].append(v)
        if any(len(b) < inst.alpha for b in blocks):
            continue
        ok = True
        for b in blocks:
            key = tuple(b)
            if key not in conn_cache:
                conn_cache[key] = is_connected(g, key)
            if not conn_cache[key]:
                ok = False
                break
        if not ok:
            continue
        cost = sum(induced_edge_cost(g, b) for b in blocks)
        cand = sorted(tuple(b) for b in blocks)
        if best is None or (cost, cand) < best:
            best = (cost, cand)
    if best is None:
        return OracleResult("infeasible", None, None, examined)
    return OracleResult("optimal", best[1], best[0], examined)


@dataclass
class PricingOracle:
    nodes: Optional[NodeSet]
    r: Optional[float]


def brute_force_pricing(inst: Instance, duals, cgc=(), subsets=(), tol: float = 1e-9, node_cap: int = 16) -> PricingOracle:
    """Minimum reduced-cost connected set in [alpha, beta] over all 2^n bitmasks.

    The reduced cost is recomputed here from the row definitions rather than
    borrowed from the column generator, so the two can be checked against each other.
    """
    n, g = inst.n, inst.graph
    if n > node_cap:
        raise ValueError(f"n={n} exceeds the pricing oracle cap of {node_cap}")
    sigma = list(getattr(duals, "sigma", ()))
    tau = list(getattr(duals, "tau", ()))
    best = None
    for mask in range(1, 1 << n):
        size = bin(mask).count("1")
        if not inst.alpha <= size <= inst.beta:
            continue
        nodes = tuple(v for v in range(n) if mask >> v & 1)
        if not is_connected(g, nodes):
            continue
        terms = [float(induced_edge_cost(g, nodes)), -duals.gamma]
        terms += [-duals.pi[v] for v in nodes]
        terms += [-s for row, s in zip(cgc, sigma) if size >= row.ell]
        terms += [-t for row, t in zip(subsets, tau) if size >= row.ell and set(nodes) <= set(row.S)]
        r = math.fsum(terms)
        if best is None or (r, nodes) < best:
            best = (r, nodes)
    if best is None or best[0] >= -tol:
        return PricingOracle(None, None)
    return PricingOracle(best[1], best[0])
