from fractions import Fraction

import pytest

from rlcsteiner.components import enumerate_catalog, working_graph
from rlcsteiner.graph import Graph
from rlcsteiner.lp import build_lp, solve_lp


def star3() -> Graph:
    """Terminals a, b, c joined to one Steiner hub s by unit edges."""
    return Graph.from_edges("abcs", [("s", "a", 1), ("s", "b", 1), ("s", "c", 1)], "abc")


@pytest.fixture
def three_star():
    return star3()


@pytest.fixture
def star_setup():
    g = star3()
    catalog = enumerate_catalog(working_graph(g), 3)
    x = solve_lp(build_lp(catalog))
    return g, catalog, x


def F(v) -> Fraction:
    return Fraction(v)
