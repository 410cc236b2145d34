"""Edge Transformer triangular attention and exact Weisfeiler-Leman coloring."""

__version__ = "0.1.0"

from .graphs import GraphPair, LabeledGraph, atomic_type, brute_force_isomorphic, builtin_pairs, parse_graph
from .model import EtConfig, EtParams, forward, init_params, rrwp, tokenize
from .wl import Coloring, distinguishes, fwl2, kwl, wl1

__all__ = [
    "Coloring", "EtConfig", "EtParams", "GraphPair", "LabeledGraph", "atomic_type", "brute_force_isomorphic",
    "builtin_pairs", "distinguishes", "forward", "fwl2", "init_params", "kwl", "parse_graph", "rrwp",
    "tokenize", "wl1",
]
