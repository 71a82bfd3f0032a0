from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

Split = Literal["train", "test", "unassigned"]
SPLITS: tuple[str, ...] = ("train", "test")


@dataclass(slots=True, frozen=True)
class EntityMention:
    """A term occurrence inside one sentence; ``span`` is half-open in code points."""

    surface: str
    start: int
    end: int
    canonical_id: Optional[str] = None

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def key(self) -> str:
        """Identity used when comparing terms across sentences."""
        return self.canonical_id if self.canonical_id is not None else self.surface


@dataclass(slots=True, frozen=True)
class SentenceRecord:
    id: str
    text: str
    category: str
    entities: tuple[EntityMention, ...] = ()
    split: Split = "unassigned"

    def canonical_ids(self) -> set[str]:
        return {entity.key for entity in self.entities}


@dataclass(slots=True, frozen=True)
class TermLexicon:
    entries: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(slots=True, frozen=True)
class Corpus:
    records: tuple[SentenceRecord, ...]
    lexicon: Optional[TermLexicon] = None

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self) -> dict[str, SentenceRecord]:
        return {record.id: record for record in self.records}

    def ids_in_split(self, split: str) -> list[str]:
        return [record.id for record in self.records if record.split == split]

    @property
    def is_split(self) -> bool:
        return bool(self.records) and all(record.split != "unassigned" for record in self.records)


class EntityLine(BaseModel):
    """Schema for one entity mention in a corpus line."""

    model_config = ConfigDict(extra="forbid")

    surface: str
    start: int = Field(ge=0)
    end: int = Field(ge=1)
    canonical_id: Optional[str] = None


class RecordLine(BaseModel):
    """Schema for one corpus JSON-lines row."""

    model_config = ConfigDict(extra="forbid")

    id: str
    text: str
    category: str
    entities: list[EntityLine] = Field(default_factory=list)
    split: Optional[Literal["train", "test"]] = None


class LexiconLine(BaseModel):
    model_config = ConfigDict(extra="forbid")

    surface: str
    canonical_id: str


__all__ = [
    "Split",
    "SPLITS",
    "EntityMention",
    "SentenceRecord",
    "TermLexicon",
    "Corpus",
    "EntityLine",
    "RecordLine",
    "LexiconLine",
]
