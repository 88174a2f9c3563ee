"""Deterministic instance families shared by the tests."""

from __future__ import annotations

from math import comb

from ccpart.graph import Graph
from ccpart.instance import Instance, SplitMix64, generate, precheck


def small_suite(count: int = 120, seed: int = 2024) -> list[Instance]:
    """Connected instances with n in [6, 10], k in {2, 3}, alpha in {2, 3}, k*alpha <= n."""
    rng = SplitMix64(seed)
    out = []
    while len(out) < count:
        n = 6 + rng.below(5)
        k = 2 + rng.below(2)
        alpha = 2 + rng.below(2)
        if k * alpha > n:
            continue
        m = rng.randint(n - 1, comb(n, 2))
        inst = Instance(generate(n, m, 1, 10, rng.next()), k, alpha)
        if not precheck(inst).infeasible:
            out.append(inst)
    return out


def path(costs) -> Graph:
    return Graph(len(costs) + 1, tuple((i, i + 1) for i in range(len(costs))), tuple(costs))


def star(leaves: int) -> Graph:
    return Graph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))


def complete(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def cycle(n: int) -> Graph:
    return Graph(n, tuple(sorted((min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n))))


def trend_suite(count: int = 20, seed: int = 7) -> list[Instance]:
    """Larger instances shaped like the published experiments: n in [20, 30], k in {3, 4},
    alpha at n // k or one below it so parts are nearly equal, and n // 10 edges beyond a tree.

    Instances the precheck refutes are skipped; they have no search tree to compare.
    """
    rng = SplitMix64(seed)
    out = []
    while len(out) < count:
        n = 20 + rng.below(11)
        k = 3 + rng.below(2)
        alpha = n // k - rng.below(2)
        m = n - 1 + n // 10
        inst = Instance(generate(n, m, 1, 10, rng.next()), k, alpha)
        if not precheck(inst).infeasible:
            out.append(inst)
    return out
