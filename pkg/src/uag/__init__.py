"""Uniform attachment random graphs and their finite-variable logic.

Generation of the G(n, m) attachment model, first-order sentences in a
bounded number of variables, pebble-game equivalence, bounded-neighborhood
canonical forms, the structural regularity checks that make large graphs
locally tree-like, and an explicit matching strategy built on top of them.
"""

from .graphs import (
    Ball,
    GenParams,
    Graph,
    attach_step,
    ball,
    complete_graph,
    cycles_up_to,
    distance,
    distances_from,
    generate,
    generate_prefixes,
    graph_from_text,
    induced_subgraph,
    read_graph,
    set_distance,
    write_graph,
)
from .rng import Stream

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "GenParams",
    "Graph",
    "Stream",
    "attach_step",
    "ball",
    "complete_graph",
    "cycles_up_to",
    "distance",
    "distances_from",
    "generate",
    "generate_prefixes",
    "graph_from_text",
    "induced_subgraph",
    "read_graph",
    "set_distance",
    "write_graph",
    "__version__",
]
