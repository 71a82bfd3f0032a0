from __future__ import annotations

import re
import threading
from typing import Any, Optional, Protocol, Sequence

import httpx
import numpy as np

from termforge.core.errors import RemoteClientError, SampleRejected
from termforge.core.http import RetryPolicy, build_http_client, post_json
from termforge.core.logging import get_logger
from termforge.core.manifest import derive_seed
from termforge.corpus.records import EntityMention, SentenceRecord
from termforge.graph.types import EntityRef

from .parsing import SentenceOutput, TokenOutput, parse_sentence_output, parse_token_output
from .prompts import render_sentence_prompt, render_token_prompt
from .records import normalize_ws

BLANK = "____"
_AUXILIARIES = re.compile(r"\b(must|shall|may|is|are|can|should|will)\b", re.IGNORECASE)


class GenerationBackend(Protocol):
    kind: str

    def token_output(self, anchor: SentenceRecord, term: EntityMention) -> TokenOutput: ...

    def sentence_output(
        self, anchor: SentenceRecord, negative: SentenceRecord, similar: dict[EntityRef, list[EntityRef]]
    ) -> SentenceOutput: ...


class ChatCompletionClient:
    """Chat-completion endpoint client; ``complete`` returns the first choice's message content."""

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        *,
        api_key: Optional[str],
        temperature: float = 0.7,
        policy: RetryPolicy | None = None,
        timeout_s: float = 60.0,
        max_in_flight: int = 4,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model_name = model_name
        self.temperature = temperature
        self.policy = policy or RetryPolicy()
        self._client = build_http_client(api_key, timeout_s, transport)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self.logger = get_logger(component="augment", client="chat_completion", endpoint=endpoint)

    def complete(self, prompt: str) -> str:
        payload: dict[str, Any] = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        with self._slots:
            body = post_json(self._client, self.endpoint, payload, self.policy)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise RemoteClientError("remote_schema_mismatch", "expected choices[0].message.content") from exc
        if not isinstance(content, str):
            raise RemoteClientError("remote_schema_mismatch", "message content must be a string")
        return content

    def close(self) -> None:
        self._client.close()


class RemoteGenerator:
    """Drives a :class:`ChatCompletionClient` with the prompt templates and parses the tagged replies."""

    kind = "remote"

    def __init__(self, client: ChatCompletionClient):
        self.client = client

    def token_output(self, anchor: SentenceRecord, term: EntityMention) -> TokenOutput:
        output = parse_token_output(self.client.complete(render_token_prompt(anchor, term)))
        if normalize_ws(output.correct_answer) != normalize_ws(term.surface):
            raise SampleRejected("answer_mismatch", anchor_id=anchor.id, expected=term.surface)
        return output

    def sentence_output(
        self, anchor: SentenceRecord, negative: SentenceRecord, similar: dict[EntityRef, list[EntityRef]]
    ) -> SentenceOutput:
        return parse_sentence_output(self.client.complete(render_sentence_prompt(anchor, negative)))


def blank_term(text: str, term: EntityMention) -> str:
    return text[: term.start] + BLANK + text[term.end :]


def negate(text: str) -> str:
    """Insert ``not`` after the first modal or auxiliary verb, else wrap in ``It is not the case that``."""
    match = _AUXILIARIES.search(text)
    if match:
        return text[: match.end()] + " not" + text[match.end() :]
    return "It is not the case that " + text[:1].lower() + text[1:]


def swap_entity(text: str, mention: EntityMention, replacement: str) -> str:
    return text[: mention.start] + replacement + text[mention.end :]


class OfflineGenerator:
    """Deterministic template generation, no network.

    Token level: the question blanks the term in the anchor and the declarative is the anchor itself. Sentence
    level: the answer is the anchor, the first negative is the confusable sentence, and the two hard negatives
    are an entity swap (a TokEdge partner, else an entity of the confusable sentence) and a negation.
    """

    kind = "offline"

    def __init__(self, seed: int):
        self.seed = seed

    def token_output(self, anchor: SentenceRecord, term: EntityMention) -> TokenOutput:
        blanked = blank_term(anchor.text, term).rstrip().rstrip(".")
        return TokenOutput(
            question=f"Which term completes: {blanked}?",
            correct_answer=term.surface,
            rephrased=anchor.text,
        )

    def _rng(self, anchor: SentenceRecord, negative: SentenceRecord) -> np.random.Generator:
        return np.random.default_rng(derive_seed(self.seed, f"{anchor.id}|{negative.id}"))

    def _swap(
        self,
        anchor: SentenceRecord,
        negative: SentenceRecord,
        similar: dict[EntityRef, list[EntityRef]],
        rng: np.random.Generator,
    ) -> Optional[str]:
        options: list[tuple[EntityMention, Sequence[str]]] = []
        for mention in anchor.entities:
            partners = [ref.surface for ref in similar.get(EntityRef.of(mention), []) if ref.surface != mention.surface]
            if partners:
                options.append((mention, partners))
        if not options:
            for mention in anchor.entities:
                partners = [
                    other.surface
                    for other in negative.entities
                    if other.key != mention.key and other.surface != mention.surface
                ]
                if partners:
                    options.append((mention, partners))
        if not options:
            return None
        mention, partners = options[int(rng.integers(len(options)))]
        return swap_entity(anchor.text, mention, partners[int(rng.integers(len(partners)))])

    def sentence_output(
        self, anchor: SentenceRecord, negative: SentenceRecord, similar: dict[EntityRef, list[EntityRef]]
    ) -> SentenceOutput:
        rng = self._rng(anchor, negative)
        swapped = self._swap(anchor, negative, similar, rng)
        negated = negate(anchor.text)
        if swapped is None:
            swapped = negate(negative.text)
        choices = (anchor.text, negative.text, swapped, negated)
        normalized = [normalize_ws(choice) for choice in choices]
        if len(set(normalized)) != len(normalized):
            raise SampleRejected("hard_negatives_degenerate", anchor_id=anchor.id, negative_id=negative.id)
        return SentenceOutput(
            question=f"In {anchor.category}, which statement is correct?",
            choices=choices,
            correct=anchor.text,
            correct_index=0,
        )


__all__ = [
    "GenerationBackend",
    "ChatCompletionClient",
    "RemoteGenerator",
    "OfflineGenerator",
    "blank_term",
    "negate",
    "swap_entity",
]
