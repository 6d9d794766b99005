from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from rlcsteiner.exact import exact_steiner
from rlcsteiner.graph import Graph, ShortestPaths, is_metric, metric_closure
from rlcsteiner.instances import (
    InstanceFile,
    ParseError,
    generate_random,
    parse_instance,
    parse_json,
    parse_stp,
    write_instance,
    write_json,
    write_stp,
)
from rlcsteiner.rounding import check_quasi_bipartite

MINIMAL = """33D32945 STP File, STP Format Version 1.0
SECTION Comment
Name "tiny"
Opt 3
END

SECTION Graph
Nodes 4
Edges 3
E 1 4 1
E 2 4 1
E 3 4 1
END

SECTION Terminals
Terminals 3
T 1
T 2
T 3
END

EOF
"""


def test_parse_minimal():
    inst = parse_stp(MINIMAL)
    assert inst.name == "tiny" and inst.known_opt == 3
    assert inst.graph.vertices == (1, 2, 3, 4)
    assert inst.graph.terminals == {1, 2, 3}
    assert [e.cost for e in inst.graph.edges] == [1, 1, 1]


def test_sections_in_any_order_and_comments():
    text = "\n".join([
        "SECTION Terminals", "# comment line", "T 1", "T 2", "END",
        "SECTION Foo", "anything goes here", "END",
        "SECTION Graph", "// another comment", "E 1 2 5/2", "END", "EOF",
    ])
    inst = parse_stp(text, "x")
    assert inst.graph.edges[0].cost == Fraction(5, 2)
    assert inst.graph.vertices == (1, 2)


def test_stp_round_trip(tmp_path):
    inst = parse_stp(MINIMAL)
    path = tmp_path / "tiny.stp"
    write_instance(inst, path)
    again = parse_instance(path)
    assert again.name == "tiny" and again.known_opt == 3
    assert [(e.u, e.v, e.cost) for e in again.graph.edges] == [(e.u, e.v, e.cost) for e in inst.graph.edges]
    assert write_stp(again) == write_stp(inst)


def test_json_round_trip(tmp_path):
    inst = generate_random(7, 4, "euclidean", 3)
    path = tmp_path / "g.json"
    write_instance(inst, path)
    again = parse_instance(path)
    assert write_json(again) == write_json(inst)


def test_negative_cost_reports_line():
    text = MINIMAL.replace("E 2 4 1", "E 2 4 -1")
    with pytest.raises(ParseError) as info:
        parse_stp(text)
    assert info.value.line == 11


@pytest.mark.parametrize("old,new,msg", [
    ("T 3\n", "T 9\n", "not a vertex"),
    ("T 3\n", "T 2\n", "duplicate terminal"),
    ("Edges 3", "Edges 4", "declared 4 edges"),
    ("E 3 4 1", "E 3 4", "edge lines"),
    ("E 3 4 1", "E 4 4 1", "self-loop"),
    ("END\n\nSECTION Graph", "\nSECTION Graph", "not closed"),
])
def test_stp_errors(old, new, msg):
    with pytest.raises(ParseError, match=msg):
        parse_stp(MINIMAL.replace(old, new, 1))


def test_json_errors():
    with pytest.raises(ParseError, match="duplicate edge id"):
        parse_json('{"vertices": [1, 2, 3], "terminals": [1, 3],'
                   ' "edges": [{"id": 0, "u": 1, "v": 2, "cost": 1}, {"id": 0, "u": 2, "v": 3, "cost": 1}]}')
    with pytest.raises(ParseError):
        parse_json('{"vertices": [1, 2], "terminals": [5], "edges": [{"u": 1, "v": 2, "cost": 1}]}')
    with pytest.raises(ParseError, match="invalid JSON"):
        parse_json("{")
    with pytest.raises(ParseError, match="needs"):
        parse_json("{}")


def test_generator_is_deterministic():
    a, b = generate_random(10, 5, "random-metric", 4), generate_random(10, 5, "random-metric", 4)
    assert write_json(a) == write_json(b)
    assert write_json(a) != write_json(generate_random(10, 5, "random-metric", 5))


def test_generator_rejects_bad_arguments():
    with pytest.raises(ValueError):
        generate_random(5, 6)
    with pytest.raises(ValueError):
        generate_random(5, 3, "planar")


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 12), st.integers(2, 7), st.integers(0, 10 ** 6))
def test_quasi_bipartite_model(n, k, seed):
    inst = generate_random(n, min(k, n), "quasi-bipartite", seed)
    assert check_quasi_bipartite(inst.graph)


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 10), st.integers(2, 6), st.integers(0, 10 ** 6))
def test_euclidean_closure_is_metric(n, k, seed):
    g = generate_random(n, min(k, n), "euclidean", seed).graph
    assert is_metric(metric_closure(g, paths=ShortestPaths(g)))


def test_instance_name_from_file_stem(tmp_path):
    path = tmp_path / "nameless.stp"
    path.write_text(MINIMAL.replace('Name "tiny"\n', ""))
    inst = parse_instance(path)
    assert isinstance(inst, InstanceFile) and inst.name == "nameless"


def test_two_vertex_file_optimum():
    text = "SECTION Graph\nNodes 2\nEdges 1\nE 1 2 7\nEND\nSECTION Terminals\nT 1\nT 2\nEND\nEOF\n"
    assert exact_steiner(parse_stp(text).graph).opt_cost == 7


def test_three_star_round_trips_through_both_formats(tmp_path):
    star = InstanceFile("star", Graph.from_edges([1, 2, 3, 4], [(4, 1, 1), (4, 2, 1), (4, 3, 1)], [1, 2, 3]))
    for suffix in (".stp", ".json"):
        path = tmp_path / f"star{suffix}"
        write_instance(star, path)
        again = parse_instance(path)
        assert again.graph.vertices == star.graph.vertices
        assert again.graph.terminals == star.graph.terminals
        assert [(e.u, e.v, e.cost) for e in again.graph.edges] == [(e.u, e.v, e.cost) for e in star.graph.edges]
