from __future__ import annotations

from pathlib import Path
from typing import Any, Iterable

from termforge.core.errors import CorpusFormatError
from termforge.core.storage import dumps_jsonl, iter_jsonl, write_text

from .types import EdgeKind, EntityRef, SenEdge, SentenceGraph, TokEdge


def edge_to_dict(src: str, dst: str, kind: EdgeKind) -> dict[str, Any]:
    if isinstance(kind, SenEdge):
        return {"src": src, "dst": dst, "kind": "sen", "reason": kind.reason}
    return {
        "src": src,
        "dst": dst,
        "kind": "tok",
        "anchor_entity": kind.anchor_entity.to_dict(),
        "other_entity": kind.other_entity.to_dict(),
        "similarity": kind.similarity,
    }


def dumps_graph(graph: SentenceGraph) -> str:
    return dumps_jsonl(edge_to_dict(src, dst, kind) for src, dst, kind in graph.edges())


def export_graph(graph: SentenceGraph, path: Path) -> Path:
    """One JSON line per undirected edge, ``src`` before ``dst`` in node order."""
    return write_text(path, dumps_graph(graph))


def _edge_from_dict(payload: dict[str, Any], line: int) -> EdgeKind:
    try:
        if payload["kind"] == "sen":
            return SenEdge(reason=payload["reason"])
        if payload["kind"] == "tok":
            return TokEdge(
                anchor_entity=EntityRef(**payload["anchor_entity"]),
                other_entity=EntityRef(**payload["other_entity"]),
                similarity=float(payload["similarity"]),
            )
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError("invalid_graph_edge", str(exc), line=line) from exc
    raise CorpusFormatError("unknown_edge_kind", line=line, kind=payload.get("kind"))


def load_graph(path: Path, node_ids: Iterable[str], thresholds: dict[str, float]) -> SentenceGraph:
    graph = SentenceGraph.empty(node_ids, thresholds)
    for line, payload in iter_jsonl(path):
        src, dst = payload.get("src"), payload.get("dst")
        if src not in graph or dst not in graph:
            raise CorpusFormatError("graph_edge_unknown_node", line=line, src=src, dst=dst)
        graph.add_edge(src, dst, _edge_from_dict(payload, line))
    return graph


__all__ = ["export_graph", "load_graph", "dumps_graph", "edge_to_dict"]
