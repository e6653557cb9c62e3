"""Counterexample graph families for discrete quantum ergodicity.

Builds Cartesian products with C_4 and hub-glued regular graphs, their
localized eigenbases, tree-product resolvents and Benjamini-Schramm ball
statistics, and checks the quantitative claims numerically.
"""
from qegraphs.graph_core import (
    Graph,
    HubGraph,
    GraphFormatError,
    cartesian_product,
    cycle_graph,
    delete_edge,
    hub_glue,
    product_index,
    product_vertex,
    random_regular,
    read_edge_list,
    write_edge_list,
)
from qegraphs.spectral import ExpReport, Spectrum, eig_sym, exp_report, product_spectrum

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "HubGraph",
    "GraphFormatError",
    "cartesian_product",
    "cycle_graph",
    "delete_edge",
    "hub_glue",
    "product_index",
    "product_vertex",
    "random_regular",
    "read_edge_list",
    "write_edge_list",
    "ExpReport",
    "Spectrum",
    "eig_sym",
    "exp_report",
    "product_spectrum",
]
