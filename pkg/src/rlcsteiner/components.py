"""Full components: minimum-cost trees whose leaves are exactly a terminal set.

Components are computed on a *working graph*, the metric closure of the
input.  In quasi-bipartite mode the Steiner-Steiner closure edges are left
out so every component stays a star.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Iterable, Sequence

from .graph import (
    Edge,
    EdgeSet,
    Graph,
    GraphError,
    ShortestPaths,
    UnionFind,
    Vertex,
    contract,
    kruskal,
    metric_closure,
)

GENERAL = "general"
QUASI_BIPARTITE = "quasi-bipartite"
MODES = (GENERAL, QUASI_BIPARTITE)

# Packs (scaled cost, edge count) into one int; edge counts stay far below this.
_EDGE_BITS = 32


class InvariantViolation(RuntimeError):
    """An internal consistency check failed.  Always a bug."""


def working_graph(graph: Graph, mode: str = GENERAL, paths: ShortestPaths | None = None) -> Graph:
    """Metric closure over all vertices; drops Steiner-Steiner edges in
    quasi-bipartite mode."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    closure = metric_closure(graph, paths=paths)
    if mode == GENERAL:
        return closure
    edges = tuple(e for e in closure.edges if e.u in closure.terminals or e.v in closure.terminals)
    return Graph(closure.vertices, edges, closure.terminals)


@dataclass(frozen=True)
class Discard:
    terminals: frozenset
    reason: str


@dataclass(frozen=True)
class FullComponent:
    terminals: frozenset
    edges: tuple[Edge, ...]
    cost: Fraction
    loss: EdgeSet
    lc_edges: tuple[Edge, ...]
    representative: dict = field(compare=False)

    @property
    def loss_cost(self) -> Fraction:
        return self.loss.cost

    @property
    def lc_cost(self) -> Fraction:
        return sum((e.cost for e in self.lc_edges), Fraction(0))

    @property
    def vertices(self) -> frozenset:
        vs = set(self.terminals)
        for e in self.edges:
            vs.update((e.u, e.v))
        return frozenset(vs)

    @property
    def steiner(self) -> frozenset:
        return self.vertices - self.terminals

    def __repr__(self) -> str:
        return f"FullComponent(K={sorted(map(str, self.terminals))}, C={self.cost}, loss={self.loss_cost})"


@dataclass(frozen=True)
class ComponentCatalog:
    graph: Graph
    r: int
    components: tuple[FullComponent, ...]
    discarded: tuple[Discard, ...] = ()

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def index_of(self, terminals: Iterable[Vertex]) -> int:
        key = frozenset(terminals)
        for i, c in enumerate(self.components):
            if c.terminals == key:
                return i
        raise KeyError(key)

    def get(self, terminals: Iterable[Vertex]) -> FullComponent:
        return self.components[self.index_of(terminals)]


class _SteinerPaths:
    """Shortest paths whose interior avoids every terminal, in packed ints."""

    def __init__(self, graph: Graph):
        self.graph = graph
        scale = lcm(*(e.cost.denominator for e in graph.edges)) if graph.edges else 1
        self.scale = scale
        self.steiner = graph.steiner
        sidx = {v: i for i, v in enumerate(self.steiner)}
        self.sidx = sidx
        n = len(self.steiner)
        dist: list[list[int | None]] = [[None] * n for _ in range(n)]
        nxt: list[list[int | None]] = [[None] * n for _ in range(n)]
        first: list[list[Edge | None]] = [[None] * n for _ in range(n)]
        for i in range(n):
            dist[i][i] = 0
            nxt[i][i] = i
        # legs[t][s] = cheapest edge from terminal t into Steiner s
        self.legs: dict[Vertex, dict[int, tuple[int, Edge]]] = {t: {} for t in graph.terminals}
        self.direct: dict[frozenset, tuple[int, Edge]] = {}
        for e in sorted(graph.edges, key=lambda e: e.key):
            w = self.pack(e.cost, 1)
            ut, vt = e.u in graph.terminals, e.v in graph.terminals
            if ut and vt:
                self.direct.setdefault(frozenset((e.u, e.v)), (w, e))
            elif ut or vt:
                t, s = (e.u, e.v) if ut else (e.v, e.u)
                self.legs[t].setdefault(sidx[s], (w, e))
            else:
                i, j = sidx[e.u], sidx[e.v]
                if dist[i][j] is None or w < dist[i][j]:
                    dist[i][j] = dist[j][i] = w
                    nxt[i][j], nxt[j][i] = j, i
                    first[i][j] = first[j][i] = e
        for k in range(n):
            for i in range(n):
                dik = dist[i][k]
                if dik is None:
                    continue
                for j in range(n):
                    dkj = dist[k][j]
                    if dkj is not None and (dist[i][j] is None or dik + dkj < dist[i][j]):
                        dist[i][j] = dik + dkj
                        nxt[i][j] = nxt[i][k]
        self.dist = dist
        self.next = nxt
        self.first = first

    def pack(self, cost: Fraction, n_edges: int) -> int:
        return (int(cost * self.scale) << _EDGE_BITS) + n_edges

    def path(self, i: int, j: int) -> list[Edge]:
        out = []
        while i != j:
            k = self.next[i][j]
            out.append(self.first[i][k])
            i = k
        return out


def optimal_full_component(graph: Graph, terminals: Iterable[Vertex],
                           _paths: _SteinerPaths | None = None) -> FullComponent | Discard:
    """Minimum-cost full component on ``terminals`` in ``graph``.

    Dreyfus-Wagner over subsets of K, rooted at Steiner vertices, with
    terminals allowed only as leaves.  Terminals outside K never enter a
    path, which is the same as deleting them.  Costs are compared
    lexicographically with the edge count, so ties go to the tree with the
    fewest Steiner vertices; on a metric graph that forces every Steiner
    vertex to have degree at least three.
    """
    K = graph.sort_vertices(set(terminals))
    if len(K) < 2:
        raise GraphError("a full component needs at least two terminals")
    for t in K:
        if t not in graph.terminals:
            raise GraphError(f"{t!r} is not a terminal")
    sp = _paths or _SteinerPaths(graph)
    n = len(sp.steiner)
    k = len(K)
    full = (1 << k) - 1
    # dp[S][v]: cheapest tree joining S (as leaves) to Steiner v; g[S][v]: same with v branching
    dp: list[list[int | None]] = [[None] * n for _ in range(1 << k)]
    g: list[list[int | None]] = [[None] * n for _ in range(1 << k)]
    dp_from: dict[tuple[int, int], tuple] = {}
    g_from: dict[tuple[int, int], int] = {}
    dist = sp.dist

    for b, t in enumerate(K):
        mask = 1 << b
        legs = sp.legs[t]
        row = dp[mask]
        for v in range(n):
            for u, (w, e) in legs.items():
                d = dist[u][v]
                if d is None:
                    continue
                if row[v] is None or w + d < row[v]:
                    row[v] = w + d
                    dp_from[mask, v] = ("leg", e, u)

    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        low = mask & -mask
        gm = g[mask]
        sub = (mask - 1) & mask
        while sub:
            if sub & low and sub != mask:
                a, b_ = dp[sub], dp[mask ^ sub]
                for v in range(n):
                    if a[v] is not None and b_[v] is not None:
                        w = a[v] + b_[v]
                        if gm[v] is None or w < gm[v]:
                            gm[v] = w
                            g_from[mask, v] = sub
            sub = (sub - 1) & mask
        if mask == full:
            break
        row = dp[mask]
        for v in range(n):
            for u in range(n):
                if gm[u] is None or dist[u][v] is None:
                    continue
                w = gm[u] + dist[u][v]
                if row[v] is None or w < row[v]:
                    row[v] = w
                    dp_from[mask, v] = ("move", u)

    best: tuple[int, object] | None = None
    if k == 2:
        direct = sp.direct.get(frozenset(K))
        if direct is not None:
            best = (direct[0], direct[1])
    for v in range(n):
        w = g[full][v]
        if w is not None and (best is None or w < best[0]):
            best = (w, v)
    key = frozenset(K)
    if best is None:
        if n == 0:
            reason = "no Steiner vertices to branch at"
        else:
            reason = "terminals cannot be joined as leaves once the other terminals are deleted"
        return Discard(key, reason)

    edges: dict[int, Edge] = {}

    def take(es):
        for e in es:
            edges[e.id] = e

    def build_dp(mask, v):
        step = dp_from[mask, v]
        if step[0] == "leg":
            _, e, u = step
            take([e])
            take(sp.path(u, v))
        else:
            u = step[1]
            build_g(mask, u)
            take(sp.path(u, v))

    def build_g(mask, v):
        sub = g_from[mask, v]
        build_dp(sub, v)
        build_dp(mask ^ sub, v)

    if isinstance(best[1], Edge):
        take([best[1]])
    else:
        build_g(full, best[1])
    tree = tuple(sorted(edges.values(), key=lambda e: e.id))
    cost = sum((e.cost for e in tree), Fraction(0))
    if sp.pack(cost, len(tree)) != best[0]:
        raise InvariantViolation(f"reconstructed component for {sorted(map(str, K))} does not match its DP value")
    _check_full_component_shape(tree, key, graph)
    return _finish(key, tree, cost)


def _check_full_component_shape(tree: Sequence[Edge], K: frozenset, graph: Graph) -> None:
    degree: dict[Vertex, int] = {}
    for e in tree:
        degree[e.u] = degree.get(e.u, 0) + 1
        degree[e.v] = degree.get(e.v, 0) + 1
    vs = list(degree)
    if len(tree) != len(vs) - 1 or len(kruskal(vs, tree)) != len(tree):
        raise InvariantViolation("full component is not a tree")
    leaves = {v for v, d in degree.items() if d == 1}
    if leaves != set(K):
        raise InvariantViolation("full component leaf set differs from K")
    if any(v in graph.terminals for v in set(vs) - set(K)):
        raise InvariantViolation("full component has an internal terminal")


def _finish(K: frozenset, tree: tuple[Edge, ...], cost: Fraction) -> FullComponent:
    loss = compute_loss(K, tree)
    lc_edges, rep = loss_contract(K, tree, loss)
    return FullComponent(K, tree, cost, loss, lc_edges, rep)


def compute_loss(terminals: Iterable[Vertex], tree: Sequence[Edge]) -> EdgeSet:
    """Cheapest edge subset of ``tree`` linking every Steiner vertex to a terminal.

    Identify all terminals and take an MST of what is left.
    """
    K = set(terminals)
    vs = set(K)
    for e in tree:
        vs.update((e.u, e.v))
    steiner = vs - K
    if not steiner:
        return EdgeSet()
    hub = object()
    mapped = [Edge(e.id, hub if e.u in K else e.u, hub if e.v in K else e.v, e.cost) for e in tree]
    chosen = {e.id for e in kruskal([hub, *steiner], mapped)}
    return EdgeSet(tuple(e for e in tree if e.id in chosen))


def loss_contract(terminals: Iterable[Vertex], tree: Sequence[Edge],
                  loss: EdgeSet) -> tuple[tuple[Edge, ...], dict]:
    """Contract the loss edges; every other edge becomes terminal-terminal.

    LC edges keep the id and cost of the component edge they came from and
    record that edge in ``origin``.
    """
    K = set(terminals)
    uf = UnionFind()
    for e in tree:
        uf.find(e.u)
        uf.find(e.v)
    for e in loss:
        uf.union(e.u, e.v)
    rep: dict = {}
    for root, members in uf.groups().items():
        ts = [v for v in members if v in K]
        if len(ts) != 1:
            raise InvariantViolation(f"loss forest component holds {len(ts)} terminals")
        for v in members:
            rep[v] = ts[0]
    loss_ids = loss.ids
    lc = tuple(Edge(e.id, rep[e.u], rep[e.v], e.cost, e) for e in tree if e.id not in loss_ids)
    return lc, rep


def terminal_subsets(graph: Graph, r: int) -> list[frozenset]:
    R = graph.ordered_terminals
    out = []
    for size in range(2, r + 1):
        out.extend(frozenset(c) for c in combinations(R, size))
    return out


def enumerate_catalog(graph: Graph, r: int | None = None) -> ComponentCatalog:
    """All full components with 2 <= |K| <= r, in subset-lexicographic order."""
    n_r = len(graph.terminals)
    r = n_r if r is None else r
    if n_r < 2:
        raise GraphError("need at least two terminals")
    if not 2 <= r <= n_r:
        raise GraphError(f"r must lie in [2, {n_r}], got {r}")
    paths = _SteinerPaths(graph)
    kept, dropped = [], []
    for K in terminal_subsets(graph, r):
        res = optimal_full_component(graph, K, _paths=paths)
        (dropped if isinstance(res, Discard) else kept).append(res)
    return ComponentCatalog(graph, r, tuple(kept), tuple(dropped))
