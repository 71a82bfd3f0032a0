"""Turns QCA samples into token-space training items for each stage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from termforge.augment.records import SentenceQCA, TokenQCA, option_order
from termforge.core.errors import SampleRejected, TermforgeError
from termforge.core.logging import get_logger
from termforge.losses.sequence import truncate_condition
from termforge.losses.token import EncodedTokenSample, encode_token_sample
from termforge.model.config import ModelConfig
from termforge.model.tokenizer import EOS_ID, Tokenizer

logger = get_logger(component="training")

Sample = Union[SentenceQCA, TokenQCA]
CHOICE_LABELS = "ABCDEFGHIJ"


@dataclass(slots=True, frozen=True)
class SFTPair:
    x: tuple[int, ...]
    y: tuple[int, ...]
    anchor_id: str = ""


@dataclass(slots=True, frozen=True)
class EncodedSentenceSample:
    question: tuple[int, ...]
    answer: tuple[int, ...]
    negatives: tuple[tuple[int, ...], ...]
    anchor_id: str = ""


@dataclass(slots=True)
class EncodeReport:
    """Samples a stage could not use, by rejection code."""

    skipped: dict[str, int] = field(default_factory=dict)

    def add(self, code: str) -> None:
        self.skipped[code] = self.skipped.get(code, 0) + 1

    @property
    def total(self) -> int:
        return sum(self.skipped.values())


def render_choices(options: Sequence[str]) -> str:
    return "\n".join(f"{CHOICE_LABELS[i]}. {option}" for i, option in enumerate(options))


def sft_prompt(sample: Sample, seed: int = 0) -> str:
    """Condition text: the question, followed by the lettered choices in seeded order for sentence-level samples."""
    if isinstance(sample, SentenceQCA):
        options = sample.options
        return f"{sample.question}\n{render_choices([options[i] for i in option_order(sample, seed)])}"
    return sample.question


def encode_sft_pair(tokenizer: Tokenizer, sample: Sample, max_len: int, seed: int = 0) -> SFTPair:
    y = [*tokenizer.encode(sample.answer), EOS_ID]
    if len(y) > max_len:
        raise SampleRejected("answer_exceeds_max_len", anchor_id=sample.anchor_id, length=len(y))
    prompt = tokenizer.encode(sft_prompt(sample, seed))
    x = truncate_condition(prompt, len(y), max_len)
    if len(x) < len(prompt):
        logger.info("condition_truncated", anchor_id=sample.anchor_id, kept=len(x), dropped=len(prompt) - len(x))
    return SFTPair(x=tuple(x), y=tuple(y), anchor_id=sample.anchor_id)


def _tail(tokens: list[int], max_len: int) -> tuple[int, ...]:
    if not tokens:
        raise SampleRejected("empty_embedding_input")
    return tuple(tokens[-max_len:])


def encode_sentence_sample(tokenizer: Tokenizer, sample: SentenceQCA, max_len: int) -> EncodedSentenceSample:
    """Tokens for the four embedding passes; over-long texts keep their trailing ``max_len`` tokens."""
    return EncodedSentenceSample(
        question=_tail(tokenizer.encode(sample.question), max_len),
        answer=_tail(tokenizer.encode(sample.answer), max_len),
        negatives=tuple(_tail(tokenizer.encode(negative), max_len) for negative in sample.negatives),
        anchor_id=sample.anchor_id,
    )


def encode_all(encoder, samples: Iterable, stage: str, report: EncodeReport) -> list:
    """Apply ``encoder`` to each sample, recording and logging the ones it rejects."""
    encoded = []
    for sample in samples:
        try:
            encoded.append(encoder(sample))
        except TermforgeError as exc:
            report.add(exc.code)
            logger.info("sample_skipped", stage=stage, anchor_id=sample.anchor_id, code=exc.code)
    return encoded


def sft_items(
    tokenizer: Tokenizer,
    q_sen: Sequence[SentenceQCA],
    q_tok: Sequence[TokenQCA],
    max_len: int,
    report: EncodeReport,
    seed: int = 0,
) -> list[SFTPair]:
    return encode_all(lambda s: encode_sft_pair(tokenizer, s, max_len, seed), [*q_sen, *q_tok], "sft", report)


def sen_items(
    tokenizer: Tokenizer, q_sen: Sequence[SentenceQCA], max_len: int, report: EncodeReport
) -> list[EncodedSentenceSample]:
    return encode_all(lambda s: encode_sentence_sample(tokenizer, s, max_len), q_sen, "sen", report)


def tok_items(
    tokenizer: Tokenizer, q_tok: Sequence[TokenQCA], max_len: int, report: EncodeReport
) -> list[EncodedTokenSample]:
    return encode_all(lambda s: encode_token_sample(tokenizer, s, max_len), q_tok, "tok", report)


def tokenizer_texts(q_sen: Sequence[SentenceQCA], q_tok: Sequence[TokenQCA]) -> list[str]:
    texts: list[str] = []
    for sample in q_sen:
        texts.extend([sample.question, sample.answer, *sample.negatives])
    for sample in q_tok:
        texts.extend([sample.question, sample.answer, *sample.negatives, sample.declarative])
    return texts


def fit_tokenizer(config: ModelConfig, q_sen: Sequence[SentenceQCA], q_tok: Sequence[TokenQCA]) -> Tokenizer:
    return Tokenizer.fit(tokenizer_texts(q_sen, q_tok), mode=config.tokenizer_mode, min_count=config.tokenizer_min_count)


def shuffled_batches(n: int, batch_size: int, rng: np.random.Generator) -> list[list[int]]:
    order = rng.permutation(n)
    return [order[start : start + batch_size].tolist() for start in range(0, n, batch_size)]


__all__ = [
    "SFTPair",
    "EncodedSentenceSample",
    "EncodeReport",
    "render_choices",
    "sft_prompt",
    "encode_sft_pair",
    "encode_sentence_sample",
    "sft_items",
    "sen_items",
    "tok_items",
    "tokenizer_texts",
    "fit_tokenizer",
    "shuffled_batches",
]
