"""The hypergraphic LP over a component catalog, solved exactly.

The solver is a two-phase tableau simplex with Bland's rule.  The tableau
is kept fraction-free: every entry is an integer over one shared positive
denominator (the basis determinant), and pivots use Bareiss' exact
division.  That keeps the arithmetic on Python ints while staying exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Iterable, Mapping, Sequence

from .components import ComponentCatalog
from .graph import Edge, UnionFind, Vertex

DEFAULT_TERMINAL_CAP = 16


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class HypergraphicLp:
    terminals: tuple[Vertex, ...]
    components: tuple[frozenset, ...]
    costs: tuple[Fraction, ...]
    losses: tuple[Fraction, ...]
    subsets: tuple[frozenset, ...]
    rows: tuple[tuple[int, ...], ...]
    rhs: tuple[int, ...]
    eq_row: tuple[int, ...] | None
    eq_rhs: int

    @property
    def n_vars(self) -> int:
        return len(self.components)

    def row_for(self, subset: Iterable[Vertex]) -> tuple[int, ...]:
        return self.rows[self.subsets.index(frozenset(subset))]


@dataclass(frozen=True)
class LpSolution:
    components: tuple[frozenset, ...]
    x: tuple[Fraction, ...]
    lp_star: Fraction
    loss_star: Fraction
    mass: Fraction
    # dual prices, kept so optimality can be rechecked without re-solving
    duals: dict = field(default_factory=dict, compare=False)
    dual_eq: Fraction = Fraction(0)
    pivots: int = 0

    def weight(self, terminals: Iterable[Vertex]) -> Fraction:
        key = frozenset(terminals)
        for k, v in zip(self.components, self.x):
            if k == key:
                return v
        return Fraction(0)

    @property
    def support(self) -> list[tuple[int, frozenset, Fraction]]:
        return [(i, k, v) for i, (k, v) in enumerate(zip(self.components, self.x)) if v]

    def as_dict(self) -> dict[frozenset, Fraction]:
        return dict(zip(self.components, self.x))


def build_lp(catalog: ComponentCatalog, terminals: Iterable[Vertex] | None = None, *,
             cap: int = DEFAULT_TERMINAL_CAP, with_equality: bool = True) -> HypergraphicLp:
    """Materialize every subset row of the hypergraphic relaxation."""
    graph = catalog.graph
    R = graph.ordered_terminals if terminals is None else graph.sort_vertices(set(terminals))
    if len(R) > cap:
        raise LpError(f"|R| = {len(R)} exceeds the enumeration cap of {cap}; "
                      "use a smaller instance or raise the cap")
    comps = tuple(c.terminals for c in catalog.components)
    subsets, rows, rhs = [], [], []
    for size in range(1, len(R) + 1):
        for S in combinations(R, size):
            S = frozenset(S)
            subsets.append(S)
            rows.append(tuple(max(len(K & S) - 1, 0) for K in comps))
            rhs.append(size - 1)
    eq_row = tuple(len(K) - 1 for K in comps) if with_equality else None
    return HypergraphicLp(
        terminals=tuple(R),
        components=comps,
        costs=tuple(c.cost for c in catalog.components),
        losses=tuple(c.loss_cost for c in catalog.components),
        subsets=tuple(subsets),
        rows=tuple(rows),
        rhs=tuple(rhs),
        eq_row=eq_row,
        eq_rhs=len(R) - 1,
    )


def violated_rows(lp: HypergraphicLp, x: Sequence[Fraction]) -> list[tuple[str, frozenset | None, Fraction, int]]:
    """Every constraint of ``lp`` that ``x`` breaks, as (kind, S, lhs, rhs)."""
    out = []
    for j, v in enumerate(x):
        if v < 0:
            out.append(("nonneg", lp.components[j], Fraction(v), 0))
    for S, row, b in zip(lp.subsets, lp.rows, lp.rhs):
        lhs = sum((a * v for a, v in zip(row, x) if a), Fraction(0))
        if lhs > b:
            out.append(("subset", S, lhs, b))
    if lp.eq_row is not None:
        lhs = sum((a * v for a, v in zip(lp.eq_row, x)), Fraction(0))
        if lhs != lp.eq_rhs:
            out.append(("equality", None, lhs, lp.eq_rhs))
    return out


class _Tableau:
    """Integer tableau; actual entry = stored entry / self.den."""

    def __init__(self, rows, n_cols):
        self.t = rows
        self.den = 1
        self.n_cols = n_cols
        self.pivots = 0

    def pivot(self, r: int, s: int) -> None:
        t = self.t
        pr = t[r]
        p = pr[s]
        d = self.den
        nz = [j for j, a in enumerate(pr) if a]
        for i, row in enumerate(t):
            if i == r:
                continue
            f = row[s]
            if f:
                new = [a * p for a in row]
                for j in nz:
                    new[j] -= f * pr[j]
            else:
                new = [a * p for a in row]
            if d != 1:
                for j, a in enumerate(new):
                    q, rem = divmod(a, d)
                    if rem:
                        raise LpError("non-exact Bareiss division (bug)")
                    new[j] = q
            t[i] = new
        self.den = p
        if p < 0:
            for i, row in enumerate(t):
                t[i] = [-a for a in row]
            self.den = -p
        self.pivots += 1


def _bland(tab: _Tableau, basis: list[int], obj: int, n_rows: int, allowed: Sequence[int]) -> None:
    t = tab.t
    rhs = tab.n_cols
    while True:
        z = t[obj]
        s = next((j for j in allowed if z[j] < 0), None)
        if s is None:
            return
        best = None
        for i in range(n_rows):
            a = t[i][s]
            if a > 0:
                b = t[i][rhs]
                if best is None:
                    best = (i, b, a)
                    continue
                _, bb, ba = best
                lhs, rhs_ = b * ba, bb * a
                if lhs < rhs_ or (lhs == rhs_ and basis[i] < basis[best[0]]):
                    best = (i, b, a)
        if best is None:
            raise LpError("LP is unbounded")
        r = best[0]
        tab.pivot(r, s)
        basis[r] = s


def solve_lp(lp: HypergraphicLp) -> LpSolution:
    """Exact optimal basic solution; deterministic under Bland's rule."""
    n = lp.n_vars
    active = [i for i, row in enumerate(lp.rows) if any(row)]
    m = len(active)
    has_eq = lp.eq_row is not None
    n_rows = m + (1 if has_eq else 0)
    # columns: x (n) | slacks (m) | artificial (1 if eq) | rhs
    art = n + m
    n_cols = n + m + (1 if has_eq else 0)
    scale = lcm(*(c.denominator for c in lp.costs)) if lp.costs else 1
    rows = []
    for k, i in enumerate(active):
        row = list(lp.rows[i]) + [0] * m + ([0] if has_eq else []) + [lp.rhs[i]]
        row[n + k] = 1
        rows.append(row)
    if has_eq:
        rows.append(list(lp.eq_row) + [0] * m + [1, lp.eq_rhs])
    cost_row = [int(c * scale) for c in lp.costs] + [0] * (n_cols - n) + [0]
    rows.append(cost_row)
    if has_eq:
        rows.append([-a for a in lp.eq_row] + [0] * m + [0, -lp.eq_rhs])
    tab = _Tableau(rows, n_cols)
    basis = list(range(n, n + m)) + ([art] if has_eq else [])
    obj2 = n_rows
    if has_eq:
        obj1 = n_rows + 1
        _bland(tab, basis, obj1, n_rows, range(n_cols))
        if tab.t[obj1][n_cols] != 0:
            raise LpError("LP is infeasible")
        if art in basis:
            r = basis.index(art)
            s = next((j for j in range(n + m) if tab.t[r][j] != 0), None)
            if s is not None:
                tab.pivot(r, s)
                basis[r] = s
        tab.t.pop()
    _bland(tab, basis, obj2, n_rows, range(n + m))

    den = tab.den
    t = tab.t
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = Fraction(t[i][n_cols], den)
    duals = {lp.subsets[i]: Fraction(-t[obj2][n + k], den * scale) for k, i in enumerate(active)}
    dual_eq = Fraction(-t[obj2][art], den * scale) if has_eq else Fraction(0)
    lp_star = sum((c * v for c, v in zip(lp.costs, x)), Fraction(0))
    sol = LpSolution(
        components=lp.components,
        x=tuple(x),
        lp_star=lp_star,
        loss_star=sum((l * v for l, v in zip(lp.losses, x)), Fraction(0)),
        mass=sum(x, Fraction(0)),
        duals=duals,
        dual_eq=dual_eq,
        pivots=tab.pivots,
    )
    problems = optimality_problems(lp, sol)
    if problems:
        raise LpError("simplex result failed its certificate: " + "; ".join(problems))
    return sol


def optimality_problems(lp: HypergraphicLp, sol: LpSolution) -> list[str]:
    """Check primal feasibility, dual feasibility and zero duality gap."""
    problems = [f"{kind} row {sorted(map(str, S)) if S else ''}: {lhs} vs {b}"
                for kind, S, lhs, b in violated_rows(lp, sol.x)]
    y = sol.duals
    if any(v > 0 for v in y.values()):
        problems.append("positive dual on a <= row")
    dual_obj = sum((y.get(S, 0) * b for S, b in zip(lp.subsets, lp.rhs)), Fraction(0))
    if lp.eq_row is not None:
        dual_obj += sol.dual_eq * lp.eq_rhs
    for j, K in enumerate(lp.components):
        price = sum((y.get(S, 0) * row[j] for S, row in zip(lp.subsets, lp.rows) if row[j]), Fraction(0))
        if lp.eq_row is not None:
            price += sol.dual_eq * lp.eq_row[j]
        if price > lp.costs[j]:
            problems.append(f"reduced cost of {sorted(map(str, K))} is negative")
    if dual_obj != sol.lp_star:
        problems.append(f"duality gap {sol.lp_star - dual_obj}")
    return problems


@dataclass(frozen=True)
class SpanningTreePolytopePoint:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    z: tuple[Fraction, ...]


@dataclass(frozen=True)
class PolytopeVerdict:
    member: bool
    violations: tuple[tuple[str, frozenset | None, Fraction, int], ...] = ()


def check_spanning_tree_polytope(point: SpanningTreePolytopePoint) -> PolytopeVerdict:
    """Exhaustive membership test for the spanning-tree polytope of H.

    Checks z >= 0, total weight |R|-1, and the weight inside every proper
    subset S against |S|-1.
    """
    R = point.vertices
    violations = []
    for e, w in zip(point.edges, point.z):
        if w < 0:
            violations.append(("nonneg", frozenset((e.u, e.v)), Fraction(w), 0))
    total = sum(point.z, Fraction(0))
    if total != len(R) - 1:
        violations.append(("total", None, total, len(R) - 1))
    pos = {v: i for i, v in enumerate(R)}
    masks = [(1 << pos[e.u]) | (1 << pos[e.v]) for e in point.edges]
    for size in range(2, len(R)):
        for S in combinations(range(len(R)), size):
            smask = sum(1 << i for i in S)
            inside = sum((w for m, w in zip(masks, point.z) if m & smask == m), Fraction(0))
            if inside > size - 1:
                violations.append(("subset", frozenset(R[i] for i in S), inside, size - 1))
    return PolytopeVerdict(not violations, tuple(violations))


def is_integral_hyper_spanning_tree(selection: Mapping[frozenset, int] | Iterable[Iterable[Vertex]],
                                    terminals: Iterable[Vertex]) -> bool:
    """Whether the chosen terminal sets form a spanning hypertree on R.

    ``selection`` is either a map K -> multiplicity or a list of sets (a
    set listed twice counts twice).
    """
    if isinstance(selection, Mapping):
        chosen = []
        for K, v in selection.items():
            if Fraction(v).denominator != 1 or v < 0:
                raise ValueError(f"non-integral weight {v} for {sorted(map(str, K))}")
            chosen.extend([frozenset(K)] * int(v))
    else:
        chosen = [frozenset(K) for K in selection]
    R = set(terminals)
    if sum(len(K) - 1 for K in chosen) != len(R) - 1:
        return False
    uf = UnionFind(R)
    for K in chosen:
        if not K <= R:
            return False
        first, *rest = K
        for v in rest:
            if not uf.union(first, v):
                return False
    return len({uf.find(v) for v in R}) == 1
