"""Randomized loss-contracting rounding for the hypergraphic Steiner tree LP."""

from .components import (
    GENERAL,
    QUASI_BIPARTITE,
    ComponentCatalog,
    Discard,
    FullComponent,
    enumerate_catalog,
    optimal_full_component,
    working_graph,
)
from .exact import ExactResult, exact_steiner, gap
from .graph import Edge, EdgeSet, Graph, contract, metric_closure, mst
from .instances import InstanceFile, generate_random, parse_instance
from .lp import LpSolution, build_lp, check_spanning_tree_polytope, is_integral_hyper_spanning_tree, solve_lp
from .rounding import (
    ALPHA,
    LN3,
    RlcConfig,
    bridge_certificate,
    check_quasi_bipartite,
    choose_m_and_t,
    drop,
    rlc_round,
    sample_component,
)

__version__ = "0.1.0"
