from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Any

from .records import Corpus


@dataclass(slots=True)
class CorpusStats:
    records: int
    by_split: dict[str, int]
    by_category: dict[str, int]
    mentions: int
    distinct_terms: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def corpus_stats(corpus: Corpus) -> CorpusStats:
    by_split = Counter(record.split for record in corpus.records)
    by_category = Counter(record.category for record in corpus.records)
    terms = {entity.key for record in corpus.records for entity in record.entities}
    return CorpusStats(
        records=len(corpus.records),
        by_split=dict(sorted(by_split.items())),
        by_category=dict(sorted(by_category.items())),
        mentions=sum(len(record.entities) for record in corpus.records),
        distinct_terms=len(terms),
    )


__all__ = ["CorpusStats", "corpus_stats"]
