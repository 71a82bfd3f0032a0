from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Literal, Union

from termforge.core.errors import ValidationFailure
from termforge.corpus.records import EntityMention

SenReason = Literal["shared_entity", "same_category"]


@dataclass(slots=True, frozen=True, order=True)
class EntityRef:
    """A term as compared across sentences: its canonical id (surface when unannotated) and surface form."""

    canonical_id: str
    surface: str

    @classmethod
    def of(cls, mention: EntityMention) -> "EntityRef":
        return cls(canonical_id=mention.key, surface=mention.surface)

    def to_dict(self) -> dict[str, str]:
        return {"canonical_id": self.canonical_id, "surface": self.surface}


@dataclass(slots=True, frozen=True)
class SenEdge:
    reason: SenReason

    def mirrored(self) -> "SenEdge":
        return self


@dataclass(slots=True, frozen=True)
class TokEdge:
    anchor_entity: EntityRef
    other_entity: EntityRef
    similarity: float

    def mirrored(self) -> "TokEdge":
        return TokEdge(anchor_entity=self.other_entity, other_entity=self.anchor_entity, similarity=self.similarity)


EdgeKind = Union[SenEdge, TokEdge]


@dataclass(slots=True)
class SentenceGraph:
    """Undirected typed multigraph over sentence ids.

    Each undirected edge is stored twice, once per endpoint; the copy at the other endpoint carries the
    mirrored kind (a TokEdge swaps its anchor and other entity).
    """

    node_ids: tuple[str, ...]
    adjacency: dict[str, list[tuple[str, EdgeKind]]]
    thresholds: dict[str, float] = field(default_factory=dict)

    @classmethod
    def empty(cls, node_ids: Iterable[str], thresholds: dict[str, float]) -> "SentenceGraph":
        ids = tuple(node_ids)
        return cls(node_ids=ids, adjacency={node: [] for node in ids}, thresholds=dict(thresholds))

    def add_edge(self, src: str, dst: str, kind: EdgeKind) -> None:
        if src == dst:
            raise ValidationFailure("self_loop", node=src)
        self.adjacency[src].append((dst, kind))
        self.adjacency[dst].append((src, kind.mirrored()))

    def __contains__(self, node: object) -> bool:
        return node in self.adjacency

    def neighbors(self, node: str) -> list[tuple[str, EdgeKind]]:
        if node not in self.adjacency:
            raise ValidationFailure("unknown_node", node=node)
        return self.adjacency[node]

    def edges(self) -> Iterator[tuple[str, str, EdgeKind]]:
        """Each undirected edge once, oriented so ``src`` precedes ``dst`` in node order."""
        position = {node: i for i, node in enumerate(self.node_ids)}
        for src in self.node_ids:
            for dst, kind in self.adjacency[src]:
                if position[src] < position[dst]:
                    yield src, dst, kind

    def edge_count(self) -> int:
        return sum(len(entries) for entries in self.adjacency.values()) // 2

    def subgraph(self, ids: Iterable[str]) -> "SentenceGraph":
        keep = set(ids)
        unknown = keep.difference(self.adjacency)
        if unknown:
            raise ValidationFailure("unknown_node", node=sorted(unknown)[0])
        nodes = tuple(node for node in self.node_ids if node in keep)
        adjacency = {
            node: [(dst, kind) for dst, kind in self.adjacency[node] if dst in keep] for node in nodes
        }
        return SentenceGraph(node_ids=nodes, adjacency=adjacency, thresholds=dict(self.thresholds))


@dataclass(slots=True)
class CandidateSets:
    s_sen: list[str] = field(default_factory=list)
    c_tok: dict[EntityRef, list[EntityRef]] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not self.s_sen and not self.c_tok


__all__ = ["EntityRef", "SenEdge", "TokEdge", "EdgeKind", "SenReason", "SentenceGraph", "CandidateSets"]
