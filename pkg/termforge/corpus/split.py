from __future__ import annotations

import math
from dataclasses import replace
from decimal import Decimal

import numpy as np

from termforge.core.errors import ValidationFailure
from termforge.core.logging import get_logger

from .records import Corpus

logger = get_logger(component="corpus")


def train_count(n_records: int, train_fraction: float) -> int:
    """``ceil(train_fraction * n)`` evaluated on the decimal literal, so 0.7 * 10 is exactly 7."""
    return math.ceil(Decimal(str(train_fraction)) * n_records)


def split_corpus(corpus: Corpus, train_fraction: float, seed: int) -> Corpus:
    """Assign train/test by a seeded shuffle; must run before any augmentation.

    Args:
        corpus: A corpus whose records are all unassigned.
        train_fraction: Ratio in (0, 1).
        seed: Shuffle seed.

    Returns:
        A new corpus in the original record order with every record assigned.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValidationFailure("train_fraction_out_of_range", value=train_fraction)
    if any(record.split != "unassigned" for record in corpus.records):
        raise ValidationFailure("corpus_already_split")

    n_records = len(corpus.records)
    order = np.random.default_rng(seed).permutation(n_records)
    n_train = train_count(n_records, train_fraction)
    train_positions = {int(index) for index in order[:n_train]}
    records = tuple(
        replace(record, split="train" if position in train_positions else "test")
        for position, record in enumerate(corpus.records)
    )
    logger.info("corpus_split", train=n_train, test=n_records - n_train, seed=seed)
    return Corpus(records=records, lexicon=corpus.lexicon)


__all__ = ["split_corpus", "train_count"]
