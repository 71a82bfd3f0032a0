from __future__ import annotations

from termforge.core.errors import ValidationFailure
from termforge.corpus.records import Corpus
from termforge.embedding.provider import EmbeddingProvider
from termforge.embedding.vectors import cosine

from .types import CandidateSets, EntityRef, SenEdge, SentenceGraph, TokEdge


def candidate_sets(
    graph: SentenceGraph,
    corpus: Corpus,
    anchor: str,
    provider: EmbeddingProvider,
    theta_sen: float,
) -> CandidateSets:
    """Per-anchor candidates for augmentation.

    ``s_sen`` holds SenEdge neighbours whose sentence cosine with the anchor exceeds ``theta_sen``, in adjacency
    order and without repeats. ``c_tok`` maps each anchor entity to the TokEdge partners incident to the anchor,
    deduplicated by ``(canonical_id, surface)``.
    """
    if anchor not in graph:
        raise ValidationFailure("unknown_anchor", anchor=anchor)
    records = corpus.by_id()
    if anchor not in records:
        raise ValidationFailure("unknown_anchor", "graph node has no corpus record", anchor=anchor)
    anchor_vector = provider.embed(records[anchor].text)

    s_sen: list[str] = []
    checked: set[str] = set()
    c_tok: dict[EntityRef, list[EntityRef]] = {}
    for neighbor, kind in graph.neighbors(anchor):
        if isinstance(kind, SenEdge):
            if neighbor in checked:
                continue
            checked.add(neighbor)
            if neighbor not in records:
                raise ValidationFailure("unknown_anchor", "graph node has no corpus record", anchor=neighbor)
            if cosine(provider.embed(records[neighbor].text), anchor_vector) > theta_sen:
                s_sen.append(neighbor)
        elif isinstance(kind, TokEdge):
            partners = c_tok.setdefault(kind.anchor_entity, [])
            if kind.other_entity not in partners:
                partners.append(kind.other_entity)
    return CandidateSets(s_sen=s_sen, c_tok=c_tok)


__all__ = ["candidate_sets"]
