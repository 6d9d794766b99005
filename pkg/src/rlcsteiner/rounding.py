"""Drops, bridge certificates and randomized loss-contracting rounding.

All costs stay rational.  The only irrational quantities are the iteration
constants ln 3 and alpha (the root of a = 1 + exp(-a)); they are held as
60-digit Decimals and only the sampler and the reported bounds touch them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, localcontext
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .components import GENERAL, MODES, QUASI_BIPARTITE, ComponentCatalog, InvariantViolation
from .graph import (
    Edge,
    EdgeSet,
    Graph,
    GraphError,
    UnionFind,
    Vertex,
    contract,
    is_spanning_tree,
    kruskal,
    mst,
    prune_to_steiner_tree,
    tree_path,
)
from .lp import LpSolution, PolytopeVerdict, SpanningTreePolytopePoint, check_spanning_tree_polytope

PRECISION = 60
SAMPLE_BITS = 192


def _ln3() -> Decimal:
    with localcontext() as ctx:
        ctx.prec = PRECISION
        return Decimal(3).ln()


def _alpha() -> Decimal:
    # Newton on the increasing function f(a) = a - 1 - exp(-a)
    with localcontext() as ctx:
        ctx.prec = PRECISION + 10
        a = Decimal("1.28")
        for _ in range(200):
            e = (-a).exp()
            step = (a - 1 - e) / (1 + e)
            a -= step
            if abs(step) < Decimal(10) ** -(PRECISION + 5):
                break
        ctx.prec = PRECISION
        return +a


LN3 = _ln3()
ALPHA = _alpha()


def _round(value: Decimal, digits: int, rounding) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = PRECISION
        return value.quantize(Decimal(10) ** -digits, rounding=rounding)


def general_ratio() -> Decimal:
    """1 + ln(3)/2 at working precision."""
    with localcontext() as ctx:
        ctx.prec = PRECISION
        return 1 + LN3 / 2


def ratio_upper(mode: str, digits: int = 50) -> Fraction:
    """The mode's ratio rounded up to ``digits`` decimals, as a Fraction."""
    value = general_ratio() if mode == GENERAL else ALPHA
    return Fraction(_round(value, digits, ROUND_CEILING))


def alpha_bracket(digits: int = 50) -> tuple[Fraction, Fraction]:
    """Rationals lo < hi, 10**-digits apart, with f(lo) < 0 < f(hi) for
    f(a) = a - 1 - exp(-a)."""
    lo = Fraction(_round(ALPHA, digits, ROUND_FLOOR))
    hi = lo + Fraction(1, 10 ** digits)
    with localcontext() as ctx:
        ctx.prec = digits + 20

        def f(q: Fraction) -> Decimal:
            a = Decimal(q.numerator) / Decimal(q.denominator)
            return a - 1 - (-a).exp()

        if not (f(lo) < 0 < f(hi)):
            raise ArithmeticError("alpha bracket does not straddle the root")
    return lo, hi


@dataclass(frozen=True)
class TerminalTree:
    terminals: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if not is_spanning_tree(self.terminals, self.edges):
            raise InvariantViolation("edge set is not a spanning tree on the terminals")

    @property
    def cost(self) -> Fraction:
        return sum((e.cost for e in self.edges), Fraction(0))

    @property
    def signature(self) -> tuple[int, ...]:
        return tuple(sorted(e.id for e in self.edges))

    def as_graph(self) -> Graph:
        return Graph(self.terminals, self.edges, frozenset(self.terminals))


def initial_tree(catalog: ComponentCatalog) -> TerminalTree:
    """MST of the working graph induced on the terminals."""
    W = catalog.graph
    R = W.ordered_terminals
    edges = [e for e in W.edges if e.u in W.terminals and e.v in W.terminals]
    sub = Graph(R, tuple(edges), frozenset(R))
    return TerminalTree(R, mst(sub).edges)


@dataclass(frozen=True)
class DropResult:
    terminals: frozenset
    drop_edges: EdgeSet
    tree_cost: Fraction

    @property
    def drop_cost(self) -> Fraction:
        return self.drop_edges.cost


def drop(tree: TerminalTree, terminals: Iterable[Vertex]) -> DropResult:
    """Edges of ``tree`` that leave the MST once ``terminals`` are identified."""
    K = frozenset(terminals)
    missing = K - set(tree.terminals)
    if missing:
        raise GraphError(f"{sorted(map(str, missing))} not spanned by the tree")
    contracted, _ = contract(tree.as_graph(), K)
    kept = mst(contracted).ids
    return DropResult(K, EdgeSet(tuple(e for e in tree.edges if e.id not in kept)), tree.cost)


@dataclass
class BridgeCertificate:
    tree: TerminalTree
    drops: tuple[DropResult, ...]
    weights: tuple[Fraction, ...]
    h_edges: tuple[Edge, ...]
    z: tuple[Fraction, ...]
    lhs: Fraction
    rhs: Fraction
    polytope: PolytopeVerdict
    max_edge_ok: bool
    tree_is_mst: bool
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def bridge_certificate(tree: TerminalTree, x: LpSolution, catalog: ComponentCatalog | None = None,
                       *, strict: bool = True) -> BridgeCertificate:
    """Build the multigraph H and weights z witnessing sum x_K drop_T(K) >= c(T).

    For each component in the support, the dropped edges are re-expressed
    as a spanning tree on K (by contracting the rest of T) and copied into
    H with weight x_K.  The certificate checks that z lies in the spanning
    tree polytope of H, that every H edge is a maximum-cost edge on the
    cycle it closes in T, and that T stays an MST of T + H.
    """
    R = tree.terminals
    drops, weights, h_edges, z = [], [], [], []
    failures = []
    for _, K, w in x.support:
        d = drop(tree, K)
        drops.append(d)
        weights.append(w)
        uf = UnionFind(R)
        dropped = d.drop_edges.ids
        for e in tree.edges:
            if e.id not in dropped:
                uf.union(e.u, e.v)
        rep = {}
        for t in K:
            root = uf.find(t)
            if root in rep:
                failures.append(f"two terminals of {sorted(map(str, K))} share a forest component")
            rep[root] = t
        local = []
        for e in d.drop_edges:
            try:
                a, b = rep[uf.find(e.u)], rep[uf.find(e.v)]
            except KeyError:
                failures.append(f"drop edge {e.id} touches a component without a terminal of K")
                continue
            local.append(Edge(len(h_edges) + len(local), a, b, e.cost, (K, e.id)))
        if not is_spanning_tree(sorted(K, key=R.index), local):
            failures.append(f"drop edges of {sorted(map(str, K))} do not map to a spanning tree on K")
        h_edges.extend(local)
        z.extend([w] * len(local))
    lhs = sum((w * d.drop_cost for w, d in zip(weights, drops)), Fraction(0))
    weighted = sum((e.cost * zz for e, zz in zip(h_edges, z)), Fraction(0))
    if weighted != lhs:
        failures.append(f"cost of z is {weighted}, expected {lhs}")
    verdict = check_spanning_tree_polytope(SpanningTreePolytopePoint(R, tuple(h_edges), tuple(z)))
    if not verdict.member:
        failures.append(f"z violates the spanning-tree polytope ({len(verdict.violations)} rows)")
    max_edge_ok = True
    for f in h_edges:
        path = tree_path(tree.edges, f.u, f.v)
        if any(e.cost > f.cost for e in path):
            max_edge_ok = False
            failures.append(f"H edge {f.u}-{f.v} is not a maximum edge of its cycle")
    offset = max((e.id for e in tree.edges), default=0) + 1
    both = list(tree.edges) + [Edge(offset + f.id, f.u, f.v, f.cost) for f in h_edges]
    union_mst = sum((e.cost for e in kruskal(R, both)), Fraction(0))
    tree_is_mst = union_mst == tree.cost
    if not tree_is_mst:
        failures.append(f"T + H has a cheaper spanning tree ({union_mst} < {tree.cost})")
    if lhs < tree.cost:
        failures.append(f"bridge inequality fails: {lhs} < {tree.cost}")
    cert = BridgeCertificate(tree, tuple(drops), tuple(weights), tuple(h_edges), tuple(z), lhs,
                             tree.cost, verdict, max_edge_ok, tree_is_mst, failures)
    if strict and failures:
        raise InvariantViolation("bridge certificate failed: " + "; ".join(failures))
    return cert


@dataclass(frozen=True)
class RlcConfig:
    M: Decimal | Fraction
    t: int
    seed: int = 0
    mode: str = GENERAL
    lam: Decimal = LN3

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.t < 0:
            raise ValueError("t must be nonnegative")

    def with_seed(self, seed: int) -> "RlcConfig":
        return RlcConfig(self.M, self.t, seed, self.mode, self.lam)


def choose_m_and_t(x: LpSolution, mode: str = GENERAL, seed: int = 0) -> RlcConfig:
    """Smallest integral t with M = t / lambda >= sum_K x_K.

    lambda is ln 3 in general mode and alpha in quasi-bipartite mode.
    """
    lam = LN3 if mode == GENERAL else ALPHA
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    mass = x.mass
    if mass == 0:
        return RlcConfig(Decimal(0), 0, seed, mode, lam)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        m = Decimal(mass.numerator) / Decimal(mass.denominator)
        t = int((m * lam).to_integral_value(rounding=ROUND_CEILING))
        M = Decimal(t) / lam
        while Fraction(M) < mass:
            t += 1
            M = Decimal(t) / lam
    return RlcConfig(M, t, seed, mode, lam)


def sample_component(x: LpSolution, M, rng: random.Random) -> int | None:
    """Index of K drawn with probability x_K / M, or None for the empty draw.

    One uniform draw from ``rng``, inverse CDF over components in catalog
    order.
    """
    u = Fraction(rng.getrandbits(SAMPLE_BITS), 1 << SAMPLE_BITS)
    target = u * Fraction(M)
    cum = Fraction(0)
    for i, v in enumerate(x.x):
        if not v:
            continue
        cum += v
        if target < cum:
            return i
    return None


class LcOrigin(NamedTuple):
    component: int
    iteration: int
    edge: Edge


@dataclass
class IterationRecord:
    index: int
    sampled: int | None
    terminals: frozenset | None
    cost_before: Fraction
    cost_after: Fraction
    drop_cost: Fraction
    lc_cost: Fraction
    tree_before: tuple[int, ...]

    @property
    def step_bound(self) -> Fraction:
        return self.cost_before - self.drop_cost + self.lc_cost

    @property
    def step_ok(self) -> bool:
        return self.cost_after <= self.step_bound

    @property
    def monotone_ok(self) -> bool:
        return self.cost_after <= self.cost_before


@dataclass
class RlcTrace:
    config: RlcConfig
    iterations: list[IterationRecord]
    initial_cost: Fraction
    final_tree: TerminalTree
    loss_sum: Fraction
    alg_working_edges: tuple[Edge, ...]
    alg_edges: tuple[Edge, ...]
    certificates: dict[tuple[int, ...], BridgeCertificate]
    connected: bool

    @property
    def final_cost(self) -> Fraction:
        return self.final_tree.cost

    @property
    def alg_working_cost(self) -> Fraction:
        return sum((e.cost for e in self.alg_working_edges), Fraction(0))

    @property
    def alg_cost(self) -> Fraction:
        return sum((e.cost for e in self.alg_edges), Fraction(0))

    @property
    def sampled(self) -> list[frozenset]:
        return [r.terminals for r in self.iterations if r.terminals is not None]


def _resolve_forced(catalog: ComponentCatalog, forced) -> list[int | None]:
    out = []
    for item in forced:
        if item is None or isinstance(item, int):
            out.append(item)
        else:
            out.append(catalog.index_of(item))
    return out


def rlc_round(graph: Graph, catalog: ComponentCatalog, x: LpSolution, config: RlcConfig, *,
              forced: Sequence | None = None, certify: bool = True) -> RlcTrace:
    """One trial of randomized loss-contracting rounding.

    ``graph`` is the input instance; ``catalog`` lives on its working graph.
    ``forced`` replaces the sampler with a fixed sequence of components
    (terminal sets, catalog indices or None), one per iteration.
    """
    W = catalog.graph
    R = W.ordered_terminals
    tree = initial_tree(catalog)
    rng = random.Random(config.seed)
    next_id = max(e.id for e in W.edges) + 1
    plan = _resolve_forced(catalog, forced) if forced is not None else None
    t = config.t if plan is None else len(plan)
    certificates: dict[tuple[int, ...], BridgeCertificate] = {}

    def certify_tree(T: TerminalTree) -> None:
        if certify and T.signature not in certificates:
            certificates[T.signature] = bridge_certificate(T, x, catalog, strict=False)

    records = []
    initial_cost = tree.cost
    for i in range(1, t + 1):
        certify_tree(tree)
        idx = plan[i - 1] if plan is not None else sample_component(x, config.M, rng)
        added: list[Edge] = []
        drop_cost = Fraction(0)
        K = None
        if idx is not None:
            comp = catalog.components[idx]
            K = comp.terminals
            drop_cost = drop(tree, K).drop_cost
            for e in comp.lc_edges:
                added.append(Edge(next_id, e.u, e.v, e.cost, LcOrigin(idx, i, e.origin)))
                next_id += 1
        new_tree = TerminalTree(R, kruskal(R, list(tree.edges) + added))
        records.append(IterationRecord(i, idx, K, tree.cost, new_tree.cost, drop_cost,
                                       sum((e.cost for e in added), Fraction(0)), tree.signature))
        tree = new_tree
    certify_tree(tree)

    working: dict[int, Edge] = {}
    for e in tree.edges:
        src = e.origin.edge if isinstance(e.origin, LcOrigin) else e
        working[src.id] = src
    loss_sum = Fraction(0)
    for r in records:
        if r.sampled is not None:
            comp = catalog.components[r.sampled]
            loss_sum += comp.loss_cost
            for e in comp.loss:
                working[e.id] = e
    alg_working = tuple(sorted(working.values(), key=lambda e: e.id))
    original: dict[int, Edge] = {}
    for e in alg_working:
        for eid in (e.origin or ()):
            original[eid] = graph.edge(eid)
    try:
        alg = prune_to_steiner_tree(graph, original.values())
        connected = True
    except GraphError:
        alg, connected = tuple(original.values()), False
    return RlcTrace(config, records, initial_cost, tree, loss_sum, alg_working, alg,
                    certificates, connected)


def check_quasi_bipartite(graph: Graph) -> bool:
    """True iff no edge joins two Steiner vertices."""
    return all(e.u in graph.terminals or e.v in graph.terminals for e in graph.edges)


def expected_cost_bound(lp_star: Fraction, loss_star: Fraction, config: RlcConfig) -> Decimal:
    """The finite-t upper bound on E[c(ALG)] from the analysis.

    General: lp*(1 + q) + loss*(q + t/M - 1) with q = (1 - 1/M)^t.
    Quasi-bipartite: lp*(1 + e^{-t/M}) + loss*(t/M - 1 - e^{-t/M}).
    """
    with localcontext() as ctx:
        ctx.prec = PRECISION
        lp = Decimal(lp_star.numerator) / Decimal(lp_star.denominator)
        loss = Decimal(loss_star.numerator) / Decimal(loss_star.denominator)
        M = Decimal(config.M) if not isinstance(config.M, Fraction) else (
            Decimal(config.M.numerator) / Decimal(config.M.denominator))
        if config.t == 0 or M == 0:
            return 2 * lp
        lam = Decimal(config.t) / M
        if config.mode == QUASI_BIPARTITE:
            e = (-lam).exp()
            return lp * (1 + e) + loss * (lam - 1 - e)
        q = (1 - 1 / M) ** config.t
        return lp * (1 + q) + loss * (q + lam - 1)
