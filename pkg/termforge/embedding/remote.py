from __future__ import annotations

import threading
from typing import Any, Optional

import httpx

from termforge.core.errors import RemoteClientError, ValidationFailure
from termforge.core.http import RetryPolicy, build_http_client, post_json
from termforge.core.logging import get_logger

from .provider import EmbeddingProvider, ProviderKind
from .vectors import Vector, as_vector


def parse_embedding_response(body: Any) -> list[float]:
    """Extract ``data[0].embedding`` from the wire response."""
    try:
        embedding = body["data"][0]["embedding"]
    except (KeyError, IndexError, TypeError) as exc:
        raise RemoteClientError("remote_schema_mismatch", "expected data[0].embedding") from exc
    if not isinstance(embedding, list) or not all(isinstance(x, (int, float)) for x in embedding):
        raise RemoteClientError("remote_schema_mismatch", "embedding must be a list of numbers")
    return embedding


class RemoteProvider(EmbeddingProvider):
    """One POST per text against an embeddings endpoint; bounded in-flight requests."""

    kind: ProviderKind = "remote"

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        *,
        api_key: Optional[str],
        dim: Optional[int] = None,
        policy: RetryPolicy | None = None,
        timeout_s: float = 60.0,
        max_in_flight: int = 4,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model_name = model_name
        self.policy = policy or RetryPolicy()
        self._dim = dim
        self._client = build_http_client(api_key, timeout_s, transport)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._dim_lock = threading.Lock()
        self.logger = get_logger(component="embedding", provider="remote", endpoint=endpoint)

    @property
    def dim(self) -> int:
        if self._dim is None:
            raise ValidationFailure("remote_dim_unknown", "call embed once or configure graph.embedding_dim")
        return self._dim

    def embed(self, text: str) -> Vector:
        if not text:
            raise ValidationFailure("empty_text")
        with self._slots:
            body = post_json(self._client, self.endpoint, {"input": text, "model": self.model_name}, self.policy)
        values = parse_embedding_response(body)
        with self._dim_lock:
            if self._dim is None:
                self._dim = len(values)
                self.logger.info("remote_dim_detected", dim=self._dim)
        if len(values) != self._dim:
            raise RemoteClientError("remote_dim_mismatch", expected=self._dim, actual=len(values))
        try:
            return as_vector(values, self._dim)
        except ValidationFailure as exc:
            raise RemoteClientError("remote_schema_mismatch", exc.code) from exc

    def close(self) -> None:
        self._client.close()


def embed_remote(
    endpoint: str,
    text: str,
    *,
    model_name: str,
    api_key: Optional[str],
    dim: Optional[int] = None,
    policy: RetryPolicy | None = None,
    transport: httpx.BaseTransport | None = None,
) -> Vector:
    """One-shot remote embedding with a throwaway client."""
    provider = RemoteProvider(endpoint, model_name, api_key=api_key, dim=dim, policy=policy, transport=transport)
    try:
        return provider.embed(text)
    finally:
        provider.close()


__all__ = ["RemoteProvider", "embed_remote", "parse_embedding_response"]
