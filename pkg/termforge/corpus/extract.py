from __future__ import annotations

from dataclasses import replace

from termforge.core.errors import ValidationFailure
from termforge.core.logging import get_logger

from .records import Corpus, EntityMention, TermLexicon

logger = get_logger(component="corpus")


def extract_entities(text: str, lexicon: TermLexicon) -> list[EntityMention]:
    """Leftmost-longest, non-overlapping lexicon matching.

    Scans ``text`` left to right; at each position the longest lexicon surface that matches is taken and the
    matched region is consumed. Matching is exact and case-sensitive, with no word-boundary check.

    Args:
        text: Sentence text.
        lexicon: Surface form to canonical id map; must be non-empty.

    Returns:
        Mentions in text order.
    """
    if not lexicon.entries:
        raise ValidationFailure("empty_lexicon")

    by_first: dict[str, list[str]] = {}
    for surface in lexicon.entries:
        by_first.setdefault(surface[0], []).append(surface)
    for surfaces in by_first.values():
        surfaces.sort(key=len, reverse=True)

    mentions: list[EntityMention] = []
    position = 0
    while position < len(text):
        match = next(
            (surface for surface in by_first.get(text[position], ()) if text.startswith(surface, position)),
            None,
        )
        if match is None:
            position += 1
            continue
        end = position + len(match)
        mentions.append(EntityMention(surface=match, start=position, end=end, canonical_id=lexicon.entries[match]))
        position = end
    return mentions


def fill_entities(corpus: Corpus, lexicon: TermLexicon) -> Corpus:
    """Run extraction on records whose entity list is empty; annotated records are left untouched."""
    filled = 0
    records = []
    for record in corpus.records:
        if record.entities:
            records.append(record)
            continue
        mentions = tuple(extract_entities(record.text, lexicon))
        filled += bool(mentions)
        records.append(replace(record, entities=mentions))
    logger.info("entities_filled", records=len(records), filled=filled)
    return Corpus(records=tuple(records), lexicon=lexicon)


__all__ = ["extract_entities", "fill_entities"]
