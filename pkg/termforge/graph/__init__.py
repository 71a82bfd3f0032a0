"""Sentence graph construction and per-anchor candidate sets."""

from .builder import build_graph
from .candidates import candidate_sets
from .export import export_graph, load_graph
from .stats import GraphStats, graph_stats
from .types import CandidateSets, EdgeKind, EntityRef, SenEdge, SentenceGraph, TokEdge

__all__ = [
    "CandidateSets",
    "EdgeKind",
    "EntityRef",
    "GraphStats",
    "SenEdge",
    "SentenceGraph",
    "TokEdge",
    "build_graph",
    "candidate_sets",
    "export_graph",
    "graph_stats",
    "load_graph",
]
