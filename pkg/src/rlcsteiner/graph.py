"""Weighted undirected multigraphs with exact rational costs.

Everything here is a pure function over immutable values.  Ties are always
broken by ``(cost, edge id)`` so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Hashable, Iterable, Sequence

Vertex = Hashable


class GraphError(ValueError):
    """Raised for malformed graphs or violated preconditions."""


class DisconnectedError(GraphError):
    def __init__(self, u: Vertex, v: Vertex):
        super().__init__(f"graph is disconnected: no path between {u!r} and {v!r}")
        self.pair = (u, v)


def as_cost(value: Any) -> Fraction:
    """Parse an edge cost into an exact nonnegative rational.

    Accepts ints, Fractions, Decimals and strings such as ``"2.5"`` or
    ``"7/3"``.  Floats go through ``str`` so ``0.1`` means one tenth.
    """
    if isinstance(value, bool):
        raise GraphError(f"invalid cost {value!r}")
    if isinstance(value, float):
        value = str(value)
    try:
        cost = Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise GraphError(f"invalid cost {value!r}") from exc
    if cost < 0:
        raise GraphError(f"negative cost {value!r}")
    return cost


@dataclass(frozen=True)
class Edge:
    id: int
    u: Vertex
    v: Vertex
    cost: Fraction
    # provenance for derived edges: a closure path, an LC back-reference, ...
    origin: Any = field(default=None, compare=False)

    def other(self, w: Vertex) -> Vertex:
        return self.v if w == self.u else self.u

    @property
    def key(self) -> tuple[Fraction, int]:
        return (self.cost, self.id)


@dataclass(frozen=True)
class EdgeSet:
    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        ids = [e.id for e in self.edges]
        if len(set(ids)) != len(ids):
            raise GraphError("edge set contains duplicate ids")

    @property
    def cost(self) -> Fraction:
        return sum((e.cost for e in self.edges), Fraction(0))

    @property
    def ids(self) -> frozenset[int]:
        return frozenset(e.id for e in self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __contains__(self, edge: Edge) -> bool:
        return edge.id in self.ids


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected multigraph with a terminal/Steiner partition.

    Parallel edges are allowed (distinct ids), self-loops are not.
    """

    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    terminals: frozenset

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "terminals", frozenset(self.terminals))
        index = {v: i for i, v in enumerate(self.vertices)}
        if len(index) != len(self.vertices):
            raise GraphError("duplicate vertex ids")
        if not self.terminals:
            raise GraphError("terminal set is empty")
        missing = [t for t in self.terminals if t not in index]
        if missing:
            raise GraphError(f"terminal {missing[0]!r} is not a vertex")
        seen = set()
        for e in self.edges:
            if e.id in seen:
                raise GraphError(f"duplicate edge id {e.id}")
            seen.add(e.id)
            if e.u not in index or e.v not in index:
                raise GraphError(f"edge {e.id} has an endpoint outside the vertex set")
            if e.u == e.v:
                raise GraphError(f"edge {e.id} is a self-loop")
            if not isinstance(e.cost, Fraction) or e.cost < 0:
                raise GraphError(f"edge {e.id} has invalid cost {e.cost!r}")
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_by_id", {e.id: e for e in self.edges})

    @classmethod
    def from_edges(
        cls,
        vertices: Iterable[Vertex],
        edges: Iterable[tuple[Vertex, Vertex, Any]],
        terminals: Iterable[Vertex],
    ) -> "Graph":
        """Build a graph from ``(u, v, cost)`` triples; ids follow input order."""
        built = [Edge(i, u, v, as_cost(c)) for i, (u, v, c) in enumerate(edges)]
        return cls(tuple(vertices), tuple(built), frozenset(terminals))

    def index(self, v: Vertex) -> int:
        return self._index[v]

    def edge(self, edge_id: int) -> Edge:
        return self._by_id[edge_id]

    def has_vertex(self, v: Vertex) -> bool:
        return v in self._index

    def is_terminal(self, v: Vertex) -> bool:
        return v in self.terminals

    @property
    def steiner(self) -> tuple[Vertex, ...]:
        return tuple(v for v in self.vertices if v not in self.terminals)

    @property
    def ordered_terminals(self) -> tuple[Vertex, ...]:
        return tuple(v for v in self.vertices if v in self.terminals)

    @property
    def cost(self) -> Fraction:
        return sum((e.cost for e in self.edges), Fraction(0))

    def sort_vertices(self, vs: Iterable[Vertex]) -> tuple[Vertex, ...]:
        return tuple(sorted(vs, key=self._index.__getitem__))

    def adjacency(self) -> dict[Vertex, list[Edge]]:
        adj: dict[Vertex, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            adj[e.u].append(e)
            adj[e.v].append(e)
        return adj

    def subgraph(self, edges: Iterable[Edge], terminals: Iterable[Vertex] | None = None) -> "Graph":
        """Graph on the endpoints of ``edges`` (plus the terminals kept)."""
        edges = tuple(edges)
        keep = set(self.terminals if terminals is None else terminals)
        for e in edges:
            keep.update((e.u, e.v))
        return Graph(self.sort_vertices(keep), edges, frozenset(self.terminals & keep))

    def __repr__(self) -> str:
        return f"Graph(|V|={len(self.vertices)}, |E|={len(self.edges)}, |R|={len(self.terminals)})"


class UnionFind:
    def __init__(self, items: Iterable[Vertex] = ()):
        self.parent: dict[Vertex, Vertex] = {x: x for x in items}

    def find(self, x: Vertex) -> Vertex:
        parent = self.parent
        parent.setdefault(x, x)
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: Vertex, b: Vertex) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True

    def groups(self) -> dict[Vertex, list[Vertex]]:
        out: dict[Vertex, list[Vertex]] = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return out


def kruskal(vertices: Sequence[Vertex], edges: Iterable[Edge]) -> tuple[Edge, ...]:
    """Minimum spanning forest; ties broken by ``(cost, id)``."""
    uf = UnionFind(vertices)
    chosen = []
    for e in sorted(edges, key=lambda e: e.key):
        if e.u == e.v:
            continue
        if uf.union(e.u, e.v):
            chosen.append(e)
            if len(chosen) == len(vertices) - 1:
                break
    return tuple(chosen)


def mst(graph: Graph) -> EdgeSet:
    """Minimum spanning tree of a connected graph.

    Raises DisconnectedError naming a pair of vertices in different
    components.
    """
    chosen = kruskal(graph.vertices, graph.edges)
    if len(chosen) != len(graph.vertices) - 1:
        uf = UnionFind(graph.vertices)
        for e in chosen:
            uf.union(e.u, e.v)
        first = graph.vertices[0]
        other = next(v for v in graph.vertices if uf.find(v) != uf.find(first))
        raise DisconnectedError(first, other)
    return EdgeSet(chosen)


def is_spanning_tree(vertices: Iterable[Vertex], edges: Sequence[Edge]) -> bool:
    vertices = list(vertices)
    if len(edges) != len(vertices) - 1:
        return False
    uf = UnionFind(vertices)
    for e in edges:
        if e.u not in uf.parent or e.v not in uf.parent or not uf.union(e.u, e.v):
            return False
    return True


def tree_path(edges: Iterable[Edge], a: Vertex, b: Vertex) -> list[Edge]:
    """Edges on the unique a-b path of a tree (or forest component)."""
    adj: dict[Vertex, list[Edge]] = {}
    for e in edges:
        adj.setdefault(e.u, []).append(e)
        adj.setdefault(e.v, []).append(e)
    prev: dict[Vertex, Edge | None] = {a: None}
    stack = [a]
    while stack:
        x = stack.pop()
        if x == b:
            break
        for e in adj.get(x, ()):
            y = e.other(x)
            if y not in prev:
                prev[y] = e
                stack.append(y)
    if b not in prev:
        raise DisconnectedError(a, b)
    path = []
    x = b
    while prev[x] is not None:
        e = prev[x]
        path.append(e)
        x = e.other(x)
    path.reverse()
    return path


def contract(graph: Graph, vertex_set: Iterable[Vertex]) -> tuple[Graph, dict[Vertex, Vertex]]:
    """Identify ``vertex_set`` into a single vertex.

    The merged vertex keeps the id of the set's first member in vertex
    order.  Parallel edges survive, self-loops are dropped.  Returns the new
    graph and the old-to-new vertex map.
    """
    members = set(vertex_set)
    if not members:
        raise GraphError("cannot contract an empty vertex set")
    for v in members:
        if not graph.has_vertex(v):
            raise GraphError(f"vertex {v!r} is not in the graph")
    rep = graph.sort_vertices(members)[0]
    mapping = {v: (rep if v in members else v) for v in graph.vertices}
    vertices = tuple(v for v in graph.vertices if v not in members or v == rep)
    edges = []
    for e in graph.edges:
        u, v = mapping[e.u], mapping[e.v]
        if u != v:
            edges.append(Edge(e.id, u, v, e.cost, e.origin))
    terminals = {mapping[t] for t in graph.terminals}
    return Graph(vertices, tuple(edges), frozenset(terminals)), mapping


class ShortestPaths:
    """All-pairs shortest paths by Floyd-Warshall.

    Among equal-cost paths the one with fewer edges wins, then the first
    found in vertex order, so the chosen paths are deterministic.
    """

    def __init__(self, graph: Graph):
        self.graph = graph
        n = len(graph.vertices)
        inf = None
        dist: list[list[tuple[Fraction, int] | None]] = [[inf] * n for _ in range(n)]
        nxt: list[list[int | None]] = [[None] * n for _ in range(n)]
        first: list[list[Edge | None]] = [[None] * n for _ in range(n)]
        for i in range(n):
            dist[i][i] = (Fraction(0), 0)
            nxt[i][i] = i
        for e in sorted(graph.edges, key=lambda e: e.key):
            i, j = graph.index(e.u), graph.index(e.v)
            w = (e.cost, 1)
            if dist[i][j] is None or w < dist[i][j]:
                dist[i][j] = dist[j][i] = w
                nxt[i][j], nxt[j][i] = j, i
                first[i][j] = first[j][i] = e
        for k in range(n):
            dk = dist[k]
            for i in range(n):
                dik = dist[i][k]
                if dik is None:
                    continue
                di = dist[i]
                for j in range(n):
                    dkj = dk[j]
                    if dkj is None:
                        continue
                    w = (dik[0] + dkj[0], dik[1] + dkj[1])
                    if di[j] is None or w < di[j]:
                        di[j] = w
                        nxt[i][j] = nxt[i][k]
        self._dist = dist
        self._next = nxt
        self._first = first

    def distance(self, u: Vertex, v: Vertex) -> Fraction:
        d = self._dist[self.graph.index(u)][self.graph.index(v)]
        if d is None:
            raise DisconnectedError(u, v)
        return d[0]

    def path(self, u: Vertex, v: Vertex) -> tuple[Edge, ...]:
        """Edges of the chosen shortest u-v path."""
        g = self.graph
        i, j = g.index(u), g.index(v)
        if self._dist[i][j] is None:
            raise DisconnectedError(u, v)
        out = []
        while i != j:
            k = self._next[i][j]
            out.append(self._first[i][k])
            i = k
        return tuple(out)


def metric_closure(graph: Graph, subset: Iterable[Vertex] | None = None,
                   paths: ShortestPaths | None = None) -> Graph:
    """Complete graph on ``subset`` weighted by shortest-path distance.

    Edge ids enumerate vertex pairs in vertex order; each edge's ``origin``
    is the tuple of host edge ids along the realizing path.
    """
    paths = paths or ShortestPaths(graph)
    keep = graph.sort_vertices(graph.vertices if subset is None else set(subset))
    edges = []
    for u, v in combinations(keep, 2):
        path = paths.path(u, v)
        edges.append(Edge(len(edges), u, v, paths.distance(u, v), tuple(e.id for e in path)))
    terminals = graph.terminals & set(keep)
    if not terminals:
        raise GraphError("closure subset contains no terminal")
    return Graph(keep, tuple(edges), terminals)


def is_metric(graph: Graph) -> bool:
    """True iff the cheapest parallel edges form a complete graph obeying
    the triangle inequality."""
    n = len(graph.vertices)
    best: dict[tuple[int, int], Fraction] = {}
    for e in graph.edges:
        i, j = sorted((graph.index(e.u), graph.index(e.v)))
        if (i, j) not in best or e.cost < best[i, j]:
            best[i, j] = e.cost
    if len(best) != n * (n - 1) // 2:
        return False

    def d(i, j):
        return best[min(i, j), max(i, j)]

    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                if k != i and k != j and d(i, j) > d(i, k) + d(k, j):
                    return False
    return True


def is_connected(graph: Graph) -> bool:
    uf = UnionFind(graph.vertices)
    for e in graph.edges:
        uf.union(e.u, e.v)
    return len({uf.find(v) for v in graph.vertices}) <= 1


def prune_to_steiner_tree(graph: Graph, edges: Iterable[Edge]) -> tuple[Edge, ...]:
    """MST of the subgraph formed by ``edges``, then strip non-terminal leaves."""
    edges = tuple({e.id: e for e in edges}.values())
    sub = graph.subgraph(edges)
    tree = list(mst(sub).edges)
    while True:
        degree: dict[Vertex, int] = {}
        for e in tree:
            degree[e.u] = degree.get(e.u, 0) + 1
            degree[e.v] = degree.get(e.v, 0) + 1
        leaves = {v for v, d in degree.items() if d == 1 and v not in graph.terminals}
        if not leaves:
            return tuple(sorted(tree, key=lambda e: e.id))
        tree = [e for e in tree if e.u not in leaves and e.v not in leaves]
