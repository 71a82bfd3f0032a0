from __future__ import annotations

from typing import Optional

import httpx

from termforge.core.config import Settings
from termforge.core.errors import ValidationFailure
from termforge.core.http import RetryPolicy
from termforge.model.checkpoint import load_checkpoint
from termforge.model.tinylm import TinyLM
from termforge.model.tokenizer import Tokenizer

from .provider import EmbeddingProvider, HashingProvider, MemoizedProvider, ModelProvider
from .remote import RemoteProvider


def get_provider(
    settings: Settings,
    model: Optional[TinyLM] = None,
    tokenizer: Optional[Tokenizer] = None,
    *,
    transport: httpx.BaseTransport | None = None,
) -> EmbeddingProvider:
    """Build the configured provider wrapped in a text memo.

    Args:
        settings: Effective settings; ``settings.graph.provider`` selects the kind.
        model: TinyLM for the ``model`` kind; loaded from ``graph.stage0_checkpoint`` when omitted.
        tokenizer: Tokenizer paired with ``model``.
        transport: Optional httpx transport for the ``remote`` kind.
    """
    graph = settings.graph
    if graph.provider == "hashing":
        return MemoizedProvider(HashingProvider(dim=graph.hashing_dim, seed=graph.hashing_seed))
    if graph.provider == "model":
        if model is None:
            if graph.stage0_checkpoint is None:
                raise ValidationFailure("model_provider_needs_checkpoint", "set graph.stage0_checkpoint")
            checkpoint = load_checkpoint(graph.stage0_checkpoint)
            model, tokenizer = checkpoint.model, checkpoint.tokenizer
        return MemoizedProvider(ModelProvider(model, tokenizer or Tokenizer()))
    if graph.provider == "remote":
        if not graph.embedding_endpoint:
            raise ValidationFailure("remote_provider_needs_endpoint", "set graph.embedding_endpoint")
        augment = settings.augment
        return MemoizedProvider(
            RemoteProvider(
                graph.embedding_endpoint,
                graph.embedding_model,
                api_key=settings.secrets.api_key,
                dim=graph.embedding_dim,
                policy=RetryPolicy(augment.max_retries, augment.backoff_initial_s, augment.backoff_max_s),
                timeout_s=augment.timeout_s,
                max_in_flight=augment.max_in_flight,
                transport=transport,
            )
        )
    raise ValidationFailure("unknown_provider", provider=graph.provider)


__all__ = ["get_provider"]
