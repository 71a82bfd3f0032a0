from __future__ import annotations

import math
from typing import Callable, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from termforge.augment.records import SentenceQCA, TokenQCA, option_order
from termforge.core.errors import ValidationFailure
from termforge.core.logging import get_logger
from termforge.core.workers import BaseWorkerBackend, ImmediateBackend
from termforge.embedding.vectors import cosine
from termforge.losses.sequence import PROB_EPS, truncate_condition
from termforge.model.tinylm import TinyLM, embed_sequence, forward
from termforge.model.tokenizer import EOS_ID, Tokenizer

from .metrics import classification_scores

logger = get_logger(component="eval")

ScoringMode = Literal["embedding_similarity", "loglikelihood"]
Scorer = Callable[[str, Sequence[str]], Sequence[float]]
Sample = Union[SentenceQCA, TokenQCA]


class QCASampleResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    anchor_id: str
    kind: str
    category: Optional[str] = None
    answer_position: int
    chosen: int
    correct: bool
    scores: list[float]


class CategoryScore(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int
    accuracy: float


class QCAAggregates(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int
    accuracy: float = Field(ge=0.0, le=1.0)
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)


class QCAResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: str
    aggregates: QCAAggregates
    per_sample: list[QCASampleResult]
    by_category: dict[str, CategoryScore] = Field(default_factory=dict)


def by_category(per_sample: Sequence[QCASampleResult]) -> dict[str, CategoryScore]:
    groups: dict[str, list[bool]] = {}
    for result in per_sample:
        if result.category is not None:
            groups.setdefault(result.category, []).append(result.correct)
    return {
        category: CategoryScore(samples=len(hits), accuracy=sum(hits) / len(hits))
        for category, hits in sorted(groups.items())
    }


def score_choices(
    samples: Sequence[Sample],
    scorer: Scorer,
    seed: int,
    *,
    mode: str = "custom",
    workers: Optional[BaseWorkerBackend] = None,
) -> QCAResult:
    """Choose one option per sample with ``scorer`` and aggregate over answer-position classes.

    Options are shown in a seeded shuffled order, the highest score wins and ties go to the lowest shown index.
    """
    if not samples:
        raise ValidationFailure("empty_sample_set")
    workers = workers or ImmediateBackend()

    def _score(sample: Sample) -> QCASampleResult:
        options = [sample.answer, *sample.negatives]
        if len(options) < 2:
            raise ValidationFailure("too_few_options", anchor_id=sample.anchor_id)
        order = option_order(sample, seed)
        shown = [options[i] for i in order]
        scores = [float(score) for score in scorer(sample.question, shown)]
        if len(scores) != len(shown):
            raise ValidationFailure("scorer_output_length", expected=len(shown), actual=len(scores))
        if not all(math.isfinite(score) for score in scores):
            raise ValidationFailure("non_finite_score", anchor_id=sample.anchor_id)
        answer_position = order.index(0)
        chosen = int(np.argmax(scores))
        return QCASampleResult(
            anchor_id=sample.anchor_id,
            kind=sample.kind,
            category=sample.category,
            answer_position=answer_position,
            chosen=chosen,
            correct=chosen == answer_position,
            scores=scores,
        )

    per_sample = workers.map_ordered(_score, samples)
    scores = classification_scores([r.answer_position for r in per_sample], [r.chosen for r in per_sample])
    result = QCAResult(
        mode=mode,
        aggregates=QCAAggregates(
            samples=len(per_sample),
            accuracy=scores.accuracy,
            precision=scores.precision,
            recall=scores.recall,
            f1=scores.f1,
        ),
        per_sample=per_sample,
        by_category=by_category(per_sample),
    )
    logger.info("qca_scored", mode=mode, samples=len(per_sample), accuracy=scores.accuracy, f1=scores.f1)
    return result


def embedding_scorer(model: TinyLM, tokenizer: Tokenizer) -> Scorer:
    """Cosine between the bidirectional embeddings of the question and each option."""
    max_len = model.config.max_len

    def _embed(text: str) -> np.ndarray:
        tokens = tokenizer.encode(text)[-max_len:]
        if not tokens:
            raise ValidationFailure("empty_embedding_input")
        return embed_sequence(model, tokens)

    def score(question: str, options: Sequence[str]) -> list[float]:
        e_q = _embed(question)
        return [cosine(e_q, _embed(option)) for option in options]

    return score


def loglikelihood_scorer(model: TinyLM, tokenizer: Tokenizer) -> Scorer:
    """Mean log-probability per token of ``option + eos`` given the question."""
    max_len = model.config.max_len

    def _mean_logprob(condition: list[int], option: str) -> float:
        target = [*tokenizer.encode(option), EOS_ID][: max_len]
        probs, _ = forward(model, truncate_condition(condition, len(target), max_len), target)
        picked = probs[np.arange(len(target)), target]
        return math.fsum(math.log(max(float(p), PROB_EPS)) for p in picked) / len(target)

    def score(question: str, options: Sequence[str]) -> list[float]:
        condition = tokenizer.encode(question)
        return [_mean_logprob(condition, option) for option in options]

    return score


def get_scorer(mode: ScoringMode, model: TinyLM, tokenizer: Tokenizer) -> Scorer:
    if mode == "embedding_similarity":
        return embedding_scorer(model, tokenizer)
    if mode == "loglikelihood":
        return loglikelihood_scorer(model, tokenizer)
    raise ValidationFailure("unknown_scoring_mode", mode=mode)


def score_qca(
    model: TinyLM,
    tokenizer: Tokenizer,
    samples: Sequence[Sample],
    mode: ScoringMode = "embedding_similarity",
    *,
    seed: int = 0,
    workers: Optional[BaseWorkerBackend] = None,
) -> QCAResult:
    return score_choices(samples, get_scorer(mode, model, tokenizer), seed, mode=mode, workers=workers)


__all__ = [
    "ScoringMode",
    "Scorer",
    "QCAResult",
    "QCAAggregates",
    "QCASampleResult",
    "CategoryScore",
    "option_order",
    "score_choices",
    "score_qca",
    "embedding_scorer",
    "loglikelihood_scorer",
    "get_scorer",
    "by_category",
]
