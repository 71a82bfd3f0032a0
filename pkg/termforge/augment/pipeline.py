from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import httpx

from termforge.core.config import AugmentSettings, Settings
from termforge.core.errors import RemoteClientError, TermforgeError, ValidationFailure
from termforge.core.http import RetryPolicy
from termforge.core.logging import get_logger
from termforge.core.workers import BaseWorkerBackend, ImmediateBackend
from termforge.corpus.records import SPLITS, Corpus, EntityMention
from termforge.embedding.provider import EmbeddingProvider
from termforge.graph.candidates import candidate_sets
from termforge.graph.types import EntityRef, SentenceGraph

from .clients import ChatCompletionClient, GenerationBackend, OfflineGenerator, RemoteGenerator
from .generate import generate_sentence_sample, generate_token_qca
from .records import Rejection, RejectionReport, SentenceQCA, TokenQCA

logger = get_logger(component="augment")


@dataclass(slots=True)
class AugmentResult:
    q_sen: list[SentenceQCA] = field(default_factory=list)
    q_tok: list[TokenQCA] = field(default_factory=list)
    report: RejectionReport = field(default_factory=RejectionReport)


def get_generator(
    settings: Settings, seed: int, *, transport: httpx.BaseTransport | None = None
) -> GenerationBackend:
    augment = settings.augment
    if augment.client == "offline":
        return OfflineGenerator(seed)
    if not augment.endpoint:
        raise ValidationFailure("remote_client_needs_endpoint", "set augment.endpoint or --endpoint")
    client = ChatCompletionClient(
        augment.endpoint,
        augment.model_name,
        api_key=settings.secrets.api_key,
        temperature=augment.temperature,
        policy=RetryPolicy(augment.max_retries, augment.backoff_initial_s, augment.backoff_max_s),
        timeout_s=augment.timeout_s,
        max_in_flight=augment.max_in_flight,
        transport=transport,
    )
    return RemoteGenerator(client)


def _augment_anchor(
    corpus: Corpus,
    graph: SentenceGraph,
    anchor_id: str,
    backend: GenerationBackend,
    provider: EmbeddingProvider,
    config: AugmentSettings,
    theta_sen: float,
) -> AugmentResult:
    records = corpus.by_id()
    anchor = records[anchor_id]
    result = AugmentResult()
    candidates = candidate_sets(graph, corpus, anchor_id, provider, theta_sen)
    if candidates.is_empty:
        logger.debug("anchor_without_candidates", anchor_id=anchor_id)
        return result

    for negative_id in candidates.s_sen[: config.cap_sen]:
        try:
            result.q_sen.append(
                generate_sentence_sample(anchor, records[negative_id], backend, candidates.c_tok, result.report)
            )
        except TermforgeError as exc:
            result.report.add(Rejection(code=exc.code, anchor_id=anchor_id, kind="sen", detail=exc.detail))

    attempted = 0
    first_mention: dict[EntityRef, EntityMention] = {}
    for mention in anchor.entities:
        first_mention.setdefault(EntityRef.of(mention), mention)
    for ref, mention in first_mention.items():
        if attempted >= config.cap_tok:
            break
        partners = candidates.c_tok.get(ref)
        if not partners:
            continue
        attempted += 1
        try:
            result.q_tok.append(generate_token_qca(anchor, mention, partners, backend, config.max_negatives))
        except TermforgeError as exc:
            result.report.add(Rejection(code=exc.code, anchor_id=anchor_id, kind="tok", detail=exc.detail))
    return result


def augment_corpus(
    corpus: Corpus,
    graph: SentenceGraph,
    backend: GenerationBackend,
    config: AugmentSettings,
    provider: EmbeddingProvider,
    theta_sen: float,
    workers: Optional[BaseWorkerBackend] = None,
) -> AugmentResult:
    """Build Q_sen and Q_tok split by split; anchors only see candidates from their own split.

    Per-sample failures land in the rejection report. Raises only when nothing at all was produced.
    """
    if not corpus.is_split:
        raise ValidationFailure("corpus_not_split")
    workers = workers or ImmediateBackend()
    merged = AugmentResult()
    for split in SPLITS:
        subgraph = graph.subgraph(corpus.ids_in_split(split))
        results = workers.map_ordered(
            lambda anchor_id: _augment_anchor(corpus, subgraph, anchor_id, backend, provider, config, theta_sen),
            subgraph.node_ids,
        )
        for result in results:
            merged.q_sen.extend(result.q_sen)
            merged.q_tok.extend(result.q_tok)
            merged.report.rejections.extend(result.report.rejections)
            merged.report.warnings.extend(result.report.warnings)
        logger.info(
            "split_augmented",
            split=split,
            anchors=len(subgraph.node_ids),
            q_sen=sum(len(r.q_sen) for r in results),
            q_tok=sum(len(r.q_tok) for r in results),
        )

    for rejection in merged.report.rejections:
        logger.info("sample_rejected", anchor_id=rejection.anchor_id, code=rejection.code, kind=rejection.kind)
    if not merged.q_sen and not merged.q_tok:
        codes = {rejection.code for rejection in merged.report.rejections}
        if codes and all(code.startswith("remote_") for code in codes):
            raise RemoteClientError("no_samples_produced", rejections=len(merged.report))
        raise ValidationFailure("no_samples_produced", rejections=len(merged.report))
    return merged


__all__ = ["AugmentResult", "augment_corpus", "get_generator"]
