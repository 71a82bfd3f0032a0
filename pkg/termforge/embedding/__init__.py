"""Embedding providers behind one contract, plus cosine similarity."""

from .factory import get_provider
from .hashing import embed_hashing
from .provider import EmbeddingProvider, HashingProvider, MemoizedProvider, ModelProvider, embed_with_model
from .remote import RemoteProvider, embed_remote
from .vectors import Vector, as_vector, cosine, l2_normalize

__all__ = [
    "EmbeddingProvider",
    "HashingProvider",
    "MemoizedProvider",
    "ModelProvider",
    "RemoteProvider",
    "Vector",
    "as_vector",
    "cosine",
    "embed_hashing",
    "embed_remote",
    "embed_with_model",
    "get_provider",
    "l2_normalize",
]
