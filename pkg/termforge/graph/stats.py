from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Any

from .types import SenEdge, SentenceGraph


@dataclass(slots=True)
class GraphStats:
    nodes: int
    edges: dict[str, int]
    degree_histogram: dict[int, int]
    isolated: int

    def to_dict(self) -> dict[str, Any]:
        payload = asdict(self)
        payload["degree_histogram"] = {str(degree): count for degree, count in self.degree_histogram.items()}
        return payload


def graph_stats(graph: SentenceGraph) -> GraphStats:
    """Node count, undirected edge counts by kind, and histogram of per-node incident edge counts."""
    counts: Counter[str] = Counter()
    for _, _, kind in graph.edges():
        counts[f"sen.{kind.reason}" if isinstance(kind, SenEdge) else "tok"] += 1
    edges = {key: counts.get(key, 0) for key in ("sen.shared_entity", "sen.same_category", "tok")}
    edges["total"] = sum(edges.values())
    degrees = Counter(len(graph.adjacency[node]) for node in graph.node_ids)
    return GraphStats(
        nodes=len(graph.node_ids),
        edges=edges,
        degree_histogram=dict(sorted(degrees.items())),
        isolated=degrees.get(0, 0),
    )


__all__ = ["GraphStats", "graph_stats"]
