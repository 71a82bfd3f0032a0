"""Corpus ingestion, lexicon entity extraction and leakage-safe splitting."""

from .extract import extract_entities, fill_entities
from .loader import dumps_corpus, load_corpus, load_lexicon, save_corpus
from .records import Corpus, EntityMention, SentenceRecord, TermLexicon
from .split import split_corpus
from .stats import CorpusStats, corpus_stats

__all__ = [
    "Corpus",
    "CorpusStats",
    "EntityMention",
    "SentenceRecord",
    "TermLexicon",
    "corpus_stats",
    "dumps_corpus",
    "extract_entities",
    "fill_entities",
    "load_corpus",
    "load_lexicon",
    "save_corpus",
    "split_corpus",
]
