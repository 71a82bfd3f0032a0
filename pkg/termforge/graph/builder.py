from __future__ import annotations

from typing import Optional

from termforge.core.logging import get_logger
from termforge.core.workers import BaseWorkerBackend, ImmediateBackend
from termforge.corpus.records import Corpus, SentenceRecord
from termforge.embedding.provider import EmbeddingProvider
from termforge.embedding.vectors import Vector, cosine

from .types import EdgeKind, EntityRef, SenEdge, SentenceGraph, TokEdge

logger = get_logger(component="graph")


def sentence_entities(record: SentenceRecord) -> list[EntityRef]:
    """Distinct ``(canonical_id, surface)`` pairs of a sentence in first-mention order."""
    seen: dict[EntityRef, None] = {}
    for mention in record.entities:
        seen.setdefault(EntityRef.of(mention), None)
    return list(seen)


def pair_edges(
    left: SentenceRecord,
    right: SentenceRecord,
    left_entities: list[EntityRef],
    right_entities: list[EntityRef],
    vectors: dict[str, Vector],
    theta_tok: float,
) -> list[EdgeKind]:
    """Edges between one unordered sentence pair, oriented from ``left``."""
    edges: list[EdgeKind] = []
    if left.canonical_ids() & right.canonical_ids():
        edges.append(SenEdge("shared_entity"))
    if left.category == right.category and left.split == right.split:
        edges.append(SenEdge("same_category"))
    for c_i in left_entities:
        for c_j in right_entities:
            if c_i.canonical_id == c_j.canonical_id:
                continue
            similarity = cosine(vectors[c_i.surface], vectors[c_j.surface])
            if similarity > theta_tok:
                edges.append(TokEdge(anchor_entity=c_i, other_entity=c_j, similarity=similarity))
    return edges


def build_graph(
    corpus: Corpus,
    provider: EmbeddingProvider,
    theta_tok: float,
    theta_sen: float = 0.7,
    backend: Optional[BaseWorkerBackend] = None,
) -> SentenceGraph:
    """All-pairs sentence graph.

    Args:
        corpus: Records with (possibly empty) entity lists.
        provider: Embeds entity surfaces for the TokEdge test.
        theta_tok: Strict lower bound on entity cosine for a TokEdge.
        theta_sen: Recorded with the graph for later candidate selection.
        backend: Worker backend; rows of the pair matrix are computed in parallel and merged in order.

    Returns:
        The graph; adjacency lists follow node order.
    """
    backend = backend or ImmediateBackend()
    records = corpus.records
    entities = [sentence_entities(record) for record in records]

    surfaces = list(dict.fromkeys(ref.surface for refs in entities for ref in refs))
    vectors = dict(zip(surfaces, backend.map_ordered(provider.embed, surfaces)))

    def row(i: int) -> list[tuple[int, EdgeKind]]:
        return [
            (j, edge)
            for j in range(i + 1, len(records))
            for edge in pair_edges(records[i], records[j], entities[i], entities[j], vectors, theta_tok)
        ]

    graph = SentenceGraph.empty((record.id for record in records), {"theta_tok": theta_tok, "theta_sen": theta_sen})
    for i, edges in enumerate(backend.map_ordered(row, range(len(records)))):
        for j, edge in edges:
            graph.add_edge(records[i].id, records[j].id, edge)

    logger.info(
        "graph_built",
        nodes=len(graph.node_ids),
        edges=graph.edge_count(),
        surfaces=len(surfaces),
        theta_tok=theta_tok,
    )
    return graph


__all__ = ["build_graph", "pair_edges", "sentence_entities"]
