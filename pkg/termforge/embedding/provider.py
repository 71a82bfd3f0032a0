from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from typing import Literal

from termforge.core.errors import ValidationFailure
from termforge.core.logging import get_logger
from termforge.model.tinylm import TinyLM, embed_sequence
from termforge.model.tokenizer import Tokenizer

from .hashing import embed_hashing
from .vectors import Vector, as_vector

ProviderKind = Literal["hashing", "model", "remote"]


class EmbeddingProvider(ABC):
    """Maps non-empty text to a fixed-length float64 vector."""

    kind: ProviderKind

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @abstractmethod
    def embed(self, text: str) -> Vector: ...


class HashingProvider(EmbeddingProvider):
    kind: ProviderKind = "hashing"

    def __init__(self, dim: int = 256, seed: int = 0):
        self._dim = dim
        self.seed = seed

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, text: str) -> Vector:
        return embed_hashing(text, self._dim, self.seed)


def embed_with_model(model: TinyLM, tokens: list[int]) -> Vector:
    """Bidirectional final-token embedding; sequences longer than the context are an error."""
    if len(tokens) > model.config.max_len:
        raise ValidationFailure("sequence_exceeds_max_len", length=len(tokens), max_len=model.config.max_len)
    return embed_sequence(model, tokens)


class ModelProvider(EmbeddingProvider):
    """Embeds text with a TinyLM; over-long inputs keep their trailing ``max_len`` tokens."""

    kind: ProviderKind = "model"

    def __init__(self, model: TinyLM, tokenizer: Tokenizer):
        self.model = model
        self.tokenizer = tokenizer
        self.logger = get_logger(component="embedding", provider="model")

    @property
    def dim(self) -> int:
        return self.model.config.d_model

    def embed(self, text: str) -> Vector:
        if not text:
            raise ValidationFailure("empty_text")
        tokens = self.tokenizer.encode(text)
        limit = self.model.config.max_len
        if len(tokens) > limit:
            self.logger.warning("embedding_input_truncated", tokens=len(tokens), max_len=limit)
            tokens = tokens[-limit:]
        return embed_with_model(self.model, tokens)


class MemoizedProvider(EmbeddingProvider):
    """In-memory memo keyed by text around another provider."""

    def __init__(self, inner: EmbeddingProvider):
        self.inner = inner
        self.kind = inner.kind
        self._memo: dict[str, Vector] = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self.inner.dim

    def embed(self, text: str) -> Vector:
        with self._lock:
            cached = self._memo.get(text)
        if cached is not None:
            return cached
        vector = as_vector(self.inner.embed(text), self.dim)
        vector.setflags(write=False)
        with self._lock:
            self._memo.setdefault(text, vector)
        return vector

    def __len__(self) -> int:
        return len(self._memo)


__all__ = [
    "EmbeddingProvider",
    "HashingProvider",
    "ModelProvider",
    "MemoizedProvider",
    "ProviderKind",
    "embed_with_model",
]
