from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from termforge.core.errors import CorpusFormatError
from termforge.core.logging import get_logger
from termforge.core.storage import iter_jsonl, write_text

from .records import Corpus, EntityLine, EntityMention, LexiconLine, RecordLine, SentenceRecord, TermLexicon

logger = get_logger(component="corpus")


def _mention_from_line(record_id: str, text: str, entity: EntityLine, line: int) -> EntityMention:
    if not (0 <= entity.start < entity.end <= len(text)):
        raise CorpusFormatError(
            "span_out_of_range", record_id=record_id, line=line, start=entity.start, end=entity.end
        )
    if text[entity.start : entity.end] != entity.surface:
        raise CorpusFormatError(
            "span_surface_mismatch",
            f"text[{entity.start}:{entity.end}]={text[entity.start:entity.end]!r} != {entity.surface!r}",
            record_id=record_id,
            line=line,
        )
    return EntityMention(surface=entity.surface, start=entity.start, end=entity.end, canonical_id=entity.canonical_id)


def validate_mentions(record_id: str, mentions: tuple[EntityMention, ...], line: int | None = None) -> None:
    ordered = sorted(mentions, key=lambda m: (m.start, m.end))
    for left, right in zip(ordered, ordered[1:]):
        if right.start < left.end:
            raise CorpusFormatError("overlapping_entities", record_id=record_id, line=line, surface=right.surface)


def parse_record(payload: Any, line: int) -> SentenceRecord:
    try:
        row = RecordLine.model_validate(payload)
    except ValidationError as exc:
        record_id = payload.get("id") if isinstance(payload, dict) else None
        raise CorpusFormatError("invalid_record", str(exc), line=line, record_id=record_id) from exc
    if not row.text.strip():
        raise CorpusFormatError("empty_text", record_id=row.id, line=line)
    mentions = tuple(_mention_from_line(row.id, row.text, entity, line) for entity in row.entities)
    validate_mentions(row.id, mentions, line)
    return SentenceRecord(
        id=row.id,
        text=row.text,
        category=row.category,
        entities=mentions,
        split=row.split or "unassigned",
    )


def load_corpus(path: Path, lexicon: TermLexicon | None = None) -> Corpus:
    """Load and validate a JSON-lines corpus, preserving input order.

    Args:
        path: Corpus file; one record per line.
        lexicon: Optional lexicon attached to the returned corpus.

    Returns:
        The validated corpus.
    """
    records: list[SentenceRecord] = []
    seen: dict[str, int] = {}
    for line, payload in iter_jsonl(path):
        record = parse_record(payload, line)
        if record.id in seen:
            raise CorpusFormatError("duplicate_id", record_id=record.id, line=line, first_line=seen[record.id])
        seen[record.id] = line
        records.append(record)

    assigned = {record.split != "unassigned" for record in records}
    if len(assigned) > 1:
        raise CorpusFormatError("inconsistent_split", "either every record carries a split or none does", path=str(path))

    logger.info("corpus_loaded", path=str(path), records=len(records))
    return Corpus(records=tuple(records), lexicon=lexicon)


def record_to_dict(record: SentenceRecord) -> dict[str, Any]:
    entities: list[dict[str, Any]] = []
    for mention in record.entities:
        entity: dict[str, Any] = {"surface": mention.surface, "start": mention.start, "end": mention.end}
        if mention.canonical_id is not None:
            entity["canonical_id"] = mention.canonical_id
        entities.append(entity)
    payload: dict[str, Any] = {"id": record.id, "text": record.text, "category": record.category, "entities": entities}
    if record.split != "unassigned":
        payload["split"] = record.split
    return payload


def dumps_corpus(corpus: Corpus) -> str:
    lines = [
        json.dumps(record_to_dict(record), ensure_ascii=False, separators=(",", ":")) for record in corpus.records
    ]
    return "".join(line + "\n" for line in lines)


def save_corpus(corpus: Corpus, path: Path) -> Path:
    """Write the canonical form: keys ``id, text, category, entities, split`` in that order."""
    return write_text(path, dumps_corpus(corpus))


def load_lexicon(path: Path) -> TermLexicon:
    entries: dict[str, str] = {}
    for line, payload in iter_jsonl(path):
        try:
            row = LexiconLine.model_validate(payload)
        except ValidationError as exc:
            raise CorpusFormatError("invalid_lexicon_entry", str(exc), line=line) from exc
        if not row.surface:
            raise CorpusFormatError("empty_surface", line=line)
        if row.surface in entries:
            raise CorpusFormatError("duplicate_surface", surface=row.surface, line=line)
        entries[row.surface] = row.canonical_id
    logger.info("lexicon_loaded", path=str(path), entries=len(entries))
    return TermLexicon(entries=entries)


__all__ = [
    "load_corpus",
    "save_corpus",
    "dumps_corpus",
    "record_to_dict",
    "parse_record",
    "validate_mentions",
    "load_lexicon",
]
