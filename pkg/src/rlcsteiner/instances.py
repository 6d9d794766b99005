"""Instance files: SteinLib-style ``.stp`` text, a native JSON format, and
seeded random generators."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .graph import Edge, Graph, GraphError, as_cost, is_connected

MODELS = ("euclidean", "random-metric", "quasi-bipartite")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<input>'}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class InstanceFile:
    name: str
    graph: Graph
    known_opt: Fraction | None = None


def _fmt_cost(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else str(c)


def parse_stp(text: str, name: str | None = None, path: str | None = None) -> InstanceFile:
    """Parse SteinLib-style text.

    Sections may come in any order; unknown sections are skipped.  Lines
    starting with ``#`` or ``//`` are comments.  A ``Opt <value>`` line in
    the Comment section records a known optimum.
    """
    section = None
    n_nodes = None
    edges: list[tuple[int, int, Fraction, int]] = []
    terminals: list[int] = []
    known_opt = None
    declared_edges = declared_terms = None

    def fail(msg, ln):
        raise ParseError(msg, ln, path)

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("//"):
            continue
        tokens = line.split()
        head = tokens[0].upper()
        if section is None:
            if head == "SECTION":
                if len(tokens) < 2:
                    fail("SECTION without a name", ln)
                section = tokens[1].lower()
            elif head == "EOF":
                break
            elif ln == 1 or "STP" in line.upper():
                continue
            else:
                fail(f"unexpected line outside a section: {line!r}", ln)
            continue
        if head == "END":
            section = None
            continue
        if head == "SECTION":
            fail(f"section {section!r} is not closed before {line!r}", ln)
        if section == "comment":
            if head == "NAME" and name is None:
                name = line.split(None, 1)[1].strip().strip('"') if len(tokens) > 1 else None
            elif head == "OPT":
                if len(tokens) != 2:
                    fail("Opt expects one value", ln)
                try:
                    known_opt = as_cost(tokens[1])
                except GraphError as exc:
                    fail(str(exc), ln)
        elif section == "graph":
            if head == "NODES":
                n_nodes = _int(tokens, 1, ln, path)
            elif head == "EDGES" or head == "ARCS":
                declared_edges = _int(tokens, 1, ln, path)
            elif head in ("E", "A"):
                if len(tokens) != 4:
                    fail("edge lines look like 'E u v cost'", ln)
                u, v = _int(tokens, 1, ln, path), _int(tokens, 2, ln, path)
                try:
                    cost = as_cost(tokens[3])
                except GraphError as exc:
                    fail(str(exc), ln)
                if u == v:
                    fail(f"self-loop at vertex {u}", ln)
                edges.append((u, v, cost, ln))
            else:
                fail(f"unknown Graph entry {tokens[0]!r}", ln)
        elif section == "terminals":
            if head == "TERMINALS":
                declared_terms = _int(tokens, 1, ln, path)
            elif head == "T":
                t = _int(tokens, 1, ln, path)
                if t in terminals:
                    fail(f"duplicate terminal {t}", ln)
                terminals.append(t)
            elif head in ("ROOT", "TP"):
                continue
            else:
                fail(f"unknown Terminals entry {tokens[0]!r}", ln)
    if section is not None:
        raise ParseError(f"section {section!r} is never closed", None, path)
    if n_nodes is None:
        n_nodes = max([max(u, v) for u, v, _, _ in edges] + terminals + [0])
    for u, v, _, ln in edges:
        for w in (u, v):
            if not 1 <= w <= n_nodes:
                raise ParseError(f"vertex {w} outside 1..{n_nodes}", ln, path)
    for t in terminals:
        if not 1 <= t <= n_nodes:
            raise ParseError(f"terminal {t} is not a vertex", None, path)
    if declared_edges is not None and declared_edges != len(edges):
        raise ParseError(f"declared {declared_edges} edges, found {len(edges)}", None, path)
    if declared_terms is not None and declared_terms != len(terminals):
        raise ParseError(f"declared {declared_terms} terminals, found {len(terminals)}", None, path)
    if not terminals:
        raise ParseError("no terminals", None, path)
    graph = Graph(tuple(range(1, n_nodes + 1)),
                  tuple(Edge(i, u, v, c) for i, (u, v, c, _) in enumerate(edges)),
                  frozenset(terminals))
    return InstanceFile(name or "instance", graph, known_opt)


def _int(tokens, i, ln, path) -> int:
    try:
        return int(tokens[i])
    except (IndexError, ValueError):
        raise ParseError(f"expected an integer in {' '.join(tokens)!r}", ln, path) from None


def write_stp(instance: InstanceFile) -> str:
    g = instance.graph
    number = {v: i for i, v in enumerate(g.vertices, start=1)}
    out = ["33D32945 STP File, STP Format Version 1.0", "", "SECTION Comment",
           f'Name "{instance.name}"']
    if instance.known_opt is not None:
        out.append(f"Opt {_fmt_cost(instance.known_opt)}")
    out += ["END", "", "SECTION Graph", f"Nodes {len(g.vertices)}", f"Edges {len(g.edges)}"]
    out += [f"E {number[e.u]} {number[e.v]} {_fmt_cost(e.cost)}" for e in g.edges]
    out += ["END", "", "SECTION Terminals", f"Terminals {len(g.terminals)}"]
    out += [f"T {number[t]}" for t in g.ordered_terminals]
    out += ["END", "", "EOF", ""]
    return "\n".join(out)


def parse_json(text: str, path: str | None = None) -> InstanceFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, path) from None
    try:
        vertices = data["vertices"]
        raw_edges = data["edges"]
        terminals = data["terminals"]
    except (KeyError, TypeError):
        raise ParseError("JSON instance needs 'vertices', 'edges' and 'terminals'", None, path) from None
    edges, seen = [], set()
    for pos, item in enumerate(raw_edges):
        eid = item.get("id", pos)
        if eid in seen:
            raise ParseError(f"duplicate edge id {eid}", None, path)
        seen.add(eid)
        try:
            edges.append(Edge(int(eid), item["u"], item["v"], as_cost(item["cost"])))
        except (KeyError, GraphError) as exc:
            raise ParseError(f"edge #{pos}: {exc}", None, path) from None
    if len(set(terminals)) != len(terminals):
        raise ParseError("duplicate terminal", None, path)
    try:
        graph = Graph(tuple(vertices), tuple(edges), frozenset(terminals))
    except GraphError as exc:
        raise ParseError(str(exc), None, path) from None
    opt = data.get("opt")
    return InstanceFile(data.get("name", "instance"), graph, None if opt is None else as_cost(opt))


def write_json(instance: InstanceFile) -> str:
    g = instance.graph
    data = {
        "name": instance.name,
        "vertices": list(g.vertices),
        "edges": [{"id": e.id, "u": e.u, "v": e.v, "cost": _fmt_cost(e.cost)} for e in g.edges],
        "terminals": list(g.ordered_terminals),
        "opt": None if instance.known_opt is None else _fmt_cost(instance.known_opt),
    }
    return json.dumps(data, indent=2) + "\n"


def parse_instance(path: str | Path) -> InstanceFile:
    """Read an ``.stp`` or ``.json`` instance file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        inst = parse_json(text, str(path))
    else:
        inst = parse_stp(text, None, str(path))
    if inst.name == "instance":
        inst = InstanceFile(path.stem, inst.graph, inst.known_opt)
    return inst


def write_instance(instance: InstanceFile, path: str | Path) -> None:
    path = Path(path)
    path.write_text(write_json(instance) if path.suffix.lower() == ".json" else write_stp(instance))


def generate_random(n_vertices: int, n_terminals: int, model: str = "random-metric",
                    seed: int = 0, *, grid: int = 20, max_cost: int = 20) -> InstanceFile:
    """Seeded random instance on vertices 1..n.

    euclidean: complete graph on integer grid points, costs are distances
    times ten, rounded.  random-metric: random connected sparse graph with
    integer costs.  quasi-bipartite: terminals joined by a random tree, each
    Steiner vertex attached to at least two terminals, no Steiner-Steiner
    edges.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; pick one of {MODELS}")
    if not 2 <= n_terminals <= n_vertices:
        raise ValueError("need 2 <= n_terminals <= n_vertices")
    rng = random.Random(f"{model}:{n_vertices}:{n_terminals}:{seed}")
    V = list(range(1, n_vertices + 1))
    R = sorted(rng.sample(V, n_terminals))
    S = [v for v in V if v not in R]
    edges: list[tuple[int, int, int]] = []
    if model == "euclidean":
        pts = {v: (rng.randrange(grid), rng.randrange(grid)) for v in V}
        for i, u in enumerate(V):
            for v in V[i + 1:]:
                (x1, y1), (x2, y2) = pts[u], pts[v]
                edges.append((u, v, round(10 * math.hypot(x1 - x2, y1 - y2))))
    elif model == "random-metric":
        order = V[:]
        rng.shuffle(order)
        present = set()
        for i in range(1, len(order)):
            u, v = order[i], order[rng.randrange(i)]
            present.add((min(u, v), max(u, v)))
        for i, u in enumerate(V):
            for v in V[i + 1:]:
                if (u, v) not in present and rng.random() < 0.35:
                    present.add((u, v))
        edges = [(u, v, rng.randint(1, max_cost)) for u, v in sorted(present)]
    else:
        order = R[:]
        rng.shuffle(order)
        for i in range(1, len(order)):
            u, v = order[i], order[rng.randrange(i)]
            edges.append((min(u, v), max(u, v), rng.randint(max_cost // 2, max_cost + max_cost // 4)))
        for s in S:
            k = rng.randint(2, n_terminals) if n_terminals >= 2 else 1
            for t in sorted(rng.sample(R, k)):
                edges.append((min(s, t), max(s, t), rng.randint(1, max_cost * 3 // 5)))
        edges.sort()
    graph = Graph.from_edges(V, edges, R)
    if not is_connected(graph):
        raise GraphError("generator produced a disconnected graph (bug)")
    return InstanceFile(f"{model}-n{n_vertices}-k{n_terminals}-s{seed}", graph)
