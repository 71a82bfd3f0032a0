from __future__ import annotations

from hashlib import blake2b

import numpy as np

from termforge.core.errors import ValidationFailure

from .vectors import Vector

NGRAM_RANGE = (2, 4)


def char_ngrams(text: str, ngram_range: tuple[int, int] = NGRAM_RANGE) -> list[str]:
    """Character n-grams in text order; a text shorter than the minimum n is its own single feature."""
    low, high = ngram_range
    grams = [text[i : i + n] for n in range(low, high + 1) for i in range(len(text) - n + 1)]
    return grams or [text]


def bucket_and_sign(ngram: str, dim: int, seed: int) -> tuple[int, int]:
    digest = blake2b(ngram.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "big", signed=True)).digest()
    value = int.from_bytes(digest, "big")
    sign = 1 if value >> 63 == 0 else -1
    return value % dim, sign


def embed_hashing(text: str, dim: int = 256, seed: int = 0) -> Vector:
    """Signed feature hashing of character 2-4-grams, L2-normalized.

    If the signs cancel to the zero vector, the unsigned counts are used instead.

    Args:
        text: Non-empty text.
        dim: Number of buckets.
        seed: Hash key; different seeds give independent bucket layouts.

    Returns:
        Unit-norm vector of length ``dim``.
    """
    if not text:
        raise ValidationFailure("empty_text")
    signed = np.zeros(dim, dtype=np.float64)
    unsigned = np.zeros(dim, dtype=np.float64)
    for gram in char_ngrams(text):
        bucket, sign = bucket_and_sign(gram, dim, seed)
        signed[bucket] += sign
        unsigned[bucket] += 1.0
    counts = signed if np.any(signed) else unsigned
    return counts / float(np.linalg.norm(counts))


__all__ = ["embed_hashing", "char_ngrams", "bucket_and_sign", "NGRAM_RANGE"]
