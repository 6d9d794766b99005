"""Exact minimum Steiner trees for small terminal sets."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm

from .graph import Edge, Graph, GraphError, ShortestPaths, kruskal, metric_closure, prune_to_steiner_tree
from .lp import LpSolution

DEFAULT_EXACT_CAP = 14


@dataclass(frozen=True)
class ExactResult:
    opt_cost: Fraction
    edges: tuple[Edge, ...]
    stats: dict = field(default_factory=dict, compare=False)


def exact_steiner(graph: Graph, *, cap: int = DEFAULT_EXACT_CAP,
                  paths: ShortestPaths | None = None) -> ExactResult:
    """Dreyfus-Wagner over subsets of R on shortest-path distances.

    dp[S][v] is the cheapest tree connecting S + {v}; the optimum is
    dp[R - {r0}][r0].  Costs are scaled to integers for the DP.
    """
    R = graph.ordered_terminals
    if len(R) > cap:
        raise GraphError(f"|R| = {len(R)} exceeds the exact-solver cap of {cap}")
    paths = paths or ShortestPaths(graph)
    if len(R) == 1:
        return ExactResult(Fraction(0), (), {"states": 0})
    V = graph.vertices
    n = len(V)
    dist = [[paths.distance(u, v) for v in V] for u in V]
    scale = lcm(*(d.denominator for row in dist for d in row))
    D = [[int(d * scale) for d in row] for row in dist]

    root = R[-1]
    base = R[:-1]
    k = len(base)
    full = (1 << k) - 1
    dp = [None] * (1 << k)
    choice: dict[tuple[int, int], tuple] = {}
    for b, t in enumerate(base):
        ti = graph.index(t)
        dp[1 << b] = list(D[ti])
        for v in range(n):
            choice[1 << b, v] = ("path", ti)
    states = 0
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        low = mask & -mask
        merged = [None] * n
        split = [0] * n
        sub = (mask - 1) & mask
        while sub:
            if sub & low:
                a, b_ = dp[sub], dp[mask ^ sub]
                for u in range(n):
                    w = a[u] + b_[u]
                    if merged[u] is None or w < merged[u]:
                        merged[u], split[u] = w, sub
                    states += 1
            sub = (sub - 1) & mask
        row = [None] * n
        for v in range(n):
            best, arg = None, None
            for u in range(n):
                w = merged[u] + D[u][v]
                if best is None or w < best:
                    best, arg = w, u
            row[v] = best
            choice[mask, v] = ("merge", arg, split[arg])
        dp[mask] = row

    ri = graph.index(root)
    opt = Fraction(dp[full][ri], scale)

    closure_pairs: list[tuple[int, int]] = []

    def walk(mask, v):
        step = choice[mask, v]
        if step[0] == "path":
            closure_pairs.append((step[1], v))
            return
        _, u, sub = step
        closure_pairs.append((u, v))
        walk(sub, u)
        walk(mask ^ sub, u)

    walk(full, ri)
    used: dict[int, Edge] = {}
    for a, b in closure_pairs:
        for e in paths.path(V[a], V[b]):
            used[e.id] = e
    tree = prune_to_steiner_tree(graph, used.values())
    cost = sum((e.cost for e in tree), Fraction(0))
    if cost != opt:
        raise GraphError(f"reconstructed Steiner tree costs {cost}, DP says {opt}")
    return ExactResult(opt, tree, {"states": states, "terminals": len(R), "vertices": n})


def brute_force_steiner(graph: Graph, paths: ShortestPaths | None = None) -> Fraction:
    """Minimum over every Steiner subset of the MST of the closure on R + subset."""
    closure = metric_closure(graph, paths=paths)
    R = closure.ordered_terminals
    best = None
    steiner = closure.steiner
    for size in range(len(steiner) + 1):
        for extra in combinations(steiner, size):
            keep = set(R) | set(extra)
            edges = [e for e in closure.edges if e.u in keep and e.v in keep]
            tree = kruskal(sorted(keep, key=closure.index), edges)
            cost = sum((e.cost for e in tree), Fraction(0))
            if best is None or cost < best:
                best = cost
    return best


def gap(exact: ExactResult, lp: LpSolution) -> Fraction:
    """OPT / lp*."""
    if lp.lp_star == 0:
        if exact.opt_cost == 0:
            return Fraction(1)
        raise ZeroDivisionError("lp* is zero but OPT is positive; malformed instance")
    return exact.opt_cost / lp.lp_star
