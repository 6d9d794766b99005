import math
import random
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from rlcsteiner.components import GENERAL, QUASI_BIPARTITE, enumerate_catalog, working_graph
from rlcsteiner.exact import exact_steiner
from rlcsteiner.graph import Edge, Graph, kruskal
from rlcsteiner.instances import generate_random
from rlcsteiner.lp import build_lp, solve_lp
from rlcsteiner.rounding import (
    ALPHA,
    LN3,
    RlcConfig,
    TerminalTree,
    alpha_bracket,
    bridge_certificate,
    check_quasi_bipartite,
    choose_m_and_t,
    drop,
    expected_cost_bound,
    general_ratio,
    initial_tree,
    ratio_upper,
    rlc_round,
    sample_component,
)


def E(i, u, v, c):
    return Edge(i, u, v, Fraction(c))


def test_constants():
    assert float(LN3) == pytest.approx(math.log(3), abs=1e-15)
    assert float(general_ratio()) == pytest.approx(1 + math.log(3) / 2, abs=1e-15)
    a = float(ALPHA)
    assert a == pytest.approx(1 + math.exp(-a), abs=1e-15)
    assert round(a, 2) == 1.28
    lo, hi = alpha_bracket()
    assert lo < Fraction(ALPHA) < hi and hi - lo == Fraction(1, 10 ** 50)
    assert ratio_upper(GENERAL) >= Fraction(general_ratio())
    assert ratio_upper(GENERAL) - Fraction(general_ratio()) < Fraction(1, 10 ** 50)
    assert ratio_upper(QUASI_BIPARTITE) > Fraction(ALPHA)


def test_drop_singleton_is_empty():
    T = TerminalTree(("a", "b"), (E(0, "a", "b", 3),))
    assert drop(T, {"a"}).drop_cost == 0


def test_drop_whole_star_tree():
    T = TerminalTree(("a", "b", "c"), (E(0, "a", "b", 2), E(1, "a", "c", 2)))
    d = drop(T, "abc")
    assert d.drop_cost == 4 and d.drop_edges.ids == {0, 1}


def test_drop_keeps_cheap_edge_on_path():
    T = TerminalTree(("a", "b", "c"), (E(0, "a", "b", 1), E(1, "b", "c", 5)))
    d = drop(T, {"a", "c"})
    assert d.drop_edges.ids == {1} and d.drop_cost == 5


def test_drop_size_is_k_minus_one():
    T = TerminalTree(tuple("abcde"), (E(0, "a", "b", 1), E(1, "b", "c", 2), E(2, "c", "d", 3), E(3, "d", "e", 4)))
    for K in ["ae", "bd", "abe", "acde"]:
        assert len(drop(T, K).drop_edges) == len(K) - 1


def test_certificate_on_star(star_setup):
    _, cat, x = star_setup
    cert = bridge_certificate(initial_tree(cat), x)
    assert cert.ok and cert.lhs == 4 and cert.rhs == 4
    assert cert.polytope.member and cert.max_edge_ok and cert.tree_is_mst


def _random_terminal_tree(catalog, rng):
    W = catalog.graph
    R = W.ordered_terminals
    edges = [e for e in W.edges if e.u in W.terminals and e.v in W.terminals]
    shuffled = {e.id: rng.random() for e in edges}
    order = sorted(edges, key=lambda e: shuffled[e.id])
    relabelled = [Edge(i, e.u, e.v, Fraction(i + 1)) for i, e in enumerate(order)]
    picked = {e.id for e in kruskal(R, relabelled)}
    return TerminalTree(R, tuple(order[i] for i in sorted(picked)))


@pytest.mark.parametrize("model", ["euclidean", "random-metric", "quasi-bipartite"])
def test_bridge_holds_for_arbitrary_trees(model):
    # the inequality needs only that T spans R, not that it is an MST
    rng = random.Random(7)
    for seed in range(3):
        inst = generate_random(8, 5, model, seed)
        mode = QUASI_BIPARTITE if model == "quasi-bipartite" else GENERAL
        cat = enumerate_catalog(working_graph(inst.graph, mode))
        x = solve_lp(build_lp(cat))
        for _ in range(4):
            cert = bridge_certificate(_random_terminal_tree(cat, rng), x)
            assert cert.ok, cert.failures


def test_choose_m_and_t(star_setup):
    _, _, x = star_setup
    cfg = choose_m_and_t(x)
    assert cfg.t == 2
    assert float(cfg.M) == pytest.approx(2 / math.log(3), abs=1e-12)
    assert Fraction(cfg.M) >= x.mass
    qb = choose_m_and_t(x, QUASI_BIPARTITE)
    assert qb.t == 2 and float(qb.M) == pytest.approx(2 / float(ALPHA))


def test_choose_zero_mass(star_setup):
    _, cat, x = star_setup
    zero = type(x)(x.components, (0,) * len(x.x), Fraction(0), Fraction(0), Fraction(0), x.duals, x.dual_eq, 0)
    cfg = choose_m_and_t(zero)
    assert cfg.t == 0


def test_sampler_frequency(star_setup):
    _, _, x = star_setup
    rng = random.Random(123)
    n = 100_000
    hits = sum(sample_component(x, 2, rng) is not None for _ in range(n))
    assert abs(hits / n - 0.5) <= 0.01


def test_sampler_respects_weights():
    g = Graph.from_edges("abc", [("a", "b", 1), ("b", "c", 1), ("a", "c", 1)], "abc")
    cat = enumerate_catalog(working_graph(g), 2)
    x = solve_lp(build_lp(cat))
    rng = random.Random(5)
    counts = {}
    for _ in range(30_000):
        i = sample_component(x, x.mass, rng)
        counts[i] = counts.get(i, 0) + 1
    assert None not in counts
    for i, w in enumerate(x.x):
        assert counts.get(i, 0) / 30_000 == pytest.approx(float(w / x.mass), abs=0.015)


def test_forced_star_trace(star_setup):
    g, cat, x = star_setup
    trace = rlc_round(g, cat, x, choose_m_and_t(x), forced=["abc"])
    rec = trace.iterations[0]
    assert (rec.cost_before, rec.drop_cost, rec.lc_cost, rec.cost_after) == (4, 4, 2, 2)
    assert trace.loss_sum == 1
    assert trace.alg_cost == 3 and trace.connected
    assert all(c.ok for c in trace.certificates.values())


def test_all_empty_draws_return_mst(star_setup):
    g, cat, x = star_setup
    trace = rlc_round(g, cat, x, choose_m_and_t(x), forced=[None, None])
    assert trace.final_cost == initial_tree(cat).cost == 4
    assert trace.alg_working_cost == 4
    # the two closure edges share the edge s-a of the input graph
    assert trace.alg_cost == 3


def test_trace_is_reproducible(star_setup):
    g, cat, x = star_setup
    cfg = choose_m_and_t(x, seed=99)
    a, b = rlc_round(g, cat, x, cfg), rlc_round(g, cat, x, cfg)
    assert [r.sampled for r in a.iterations] == [r.sampled for r in b.iterations]
    assert a.alg_cost == b.alg_cost


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["euclidean", "random-metric", "quasi-bipartite"]),
       st.integers(4, 9), st.integers(2, 5), st.integers(0, 10 ** 6))
def test_trace_invariants(model, n, k, seed):
    k = min(k, n)
    inst = generate_random(n, k, model, seed)
    mode = QUASI_BIPARTITE if model == "quasi-bipartite" else GENERAL
    cat = enumerate_catalog(working_graph(inst.graph, mode))
    x = solve_lp(build_lp(cat))
    opt = exact_steiner(inst.graph).opt_cost
    trace = rlc_round(inst.graph, cat, x, choose_m_and_t(x, mode, seed))
    for rec in trace.iterations:
        assert rec.step_ok and rec.monotone_ok
    assert all(c.ok for c in trace.certificates.values())
    assert trace.connected
    assert trace.alg_cost <= trace.alg_working_cost <= trace.final_cost + trace.loss_sum
    assert opt <= trace.alg_cost


def test_check_quasi_bipartite(three_star):
    assert check_quasi_bipartite(three_star)
    g = Graph.from_edges("abst", [("a", "s", 1), ("s", "t", 1), ("t", "b", 1)], "ab")
    assert not check_quasi_bipartite(g)


def test_expected_bound_tends_to_ratio():
    lp, loss = Fraction(10), Fraction(5)
    t = 10 ** 6
    cfg = RlcConfig(Decimal(t) / LN3, t)
    assert float(expected_cost_bound(lp, loss, cfg)) == pytest.approx(10 * float(general_ratio()), rel=1e-5)
    cfg = RlcConfig(Decimal(t) / ALPHA, t, mode=QUASI_BIPARTITE, lam=ALPHA)
    assert float(expected_cost_bound(lp, Fraction(0), cfg)) == pytest.approx(10 * float(ALPHA), rel=1e-5)


def test_config_validation():
    with pytest.raises(ValueError):
        RlcConfig(Decimal(1), -1)
    with pytest.raises(ValueError):
        RlcConfig(Decimal(1), 1, mode="bogus")
