from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from termforge.core.errors import ValidationFailure
from termforge.core.logging import get_logger
from termforge.core.workers import BaseWorkerBackend, ImmediateBackend
from termforge.model.tinylm import TinyLM, greedy_generate
from termforge.model.tokenizer import Tokenizer

from .metrics import corpus_bleu, normalize_tokens, rouge_l, rouge_n

logger = get_logger(component="eval")


@dataclass(slots=True, frozen=True)
class QAPair:
    question: str
    reference: str
    anchor_id: str = ""
    kind: str = ""


class QASampleResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    anchor_id: str
    kind: str
    generated: str
    reference: str
    rouge1: float
    rougeL: float
    truncated: bool


class QAAggregates(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int
    bleu1: float = Field(ge=0.0, le=1.0)
    bleu4: float = Field(ge=0.0, le=1.0)
    rouge1: float = Field(ge=0.0, le=1.0)
    rougeL: float = Field(ge=0.0, le=1.0)
    truncated: int


class QAResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    aggregates: QAAggregates
    per_sample: list[QASampleResult]


def score_texts(pairs: Sequence[QAPair], generations: Sequence[str], truncated: Sequence[bool]) -> QAResult:
    """Score generated texts against their references.

    BLEU pools counts over the whole set; ROUGE-1 and ROUGE-L are per-sample F-measures averaged.
    """
    if not pairs:
        raise ValidationFailure("empty_sample_set")
    hypotheses = [normalize_tokens(text) for text in generations]
    references = [normalize_tokens(pair.reference) for pair in pairs]
    per_sample = [
        QASampleResult(
            anchor_id=pair.anchor_id,
            kind=pair.kind,
            generated=text,
            reference=pair.reference,
            rouge1=rouge_n(hyp, ref, 1),
            rougeL=rouge_l(hyp, ref),
            truncated=flag,
        )
        for pair, text, hyp, ref, flag in zip(pairs, generations, hypotheses, references, truncated)
    ]
    n = len(per_sample)
    return QAResult(
        aggregates=QAAggregates(
            samples=n,
            bleu1=corpus_bleu(hypotheses, references, 1),
            bleu4=corpus_bleu(hypotheses, references, 4),
            rouge1=math.fsum(r.rouge1 for r in per_sample) / n,
            rougeL=math.fsum(r.rougeL for r in per_sample) / n,
            truncated=sum(1 for r in per_sample if r.truncated),
        ),
        per_sample=per_sample,
    )


def score_qa(
    model: TinyLM,
    tokenizer: Tokenizer,
    pairs: Sequence[QAPair],
    max_new: int = 64,
    *,
    workers: Optional[BaseWorkerBackend] = None,
) -> QAResult:
    """Greedy answers to each question, scored with BLEU-1/4 and ROUGE-1/L.

    Questions longer than the context keep their trailing tokens; such samples, and generations stopped by the
    context limit, are flagged ``truncated``.
    """
    if not pairs:
        raise ValidationFailure("empty_sample_set")
    for pair in pairs:
        if not normalize_tokens(pair.reference):
            raise ValidationFailure("empty_reference", anchor_id=pair.anchor_id)
    workers = workers or ImmediateBackend()
    room = model.config.max_len - 1

    def _generate(pair: QAPair) -> tuple[str, bool]:
        condition = tokenizer.encode(pair.question)
        clipped = condition[-room:] if len(condition) > room else condition
        generation = greedy_generate(model, clipped, max_new)
        truncated = generation.truncated or len(clipped) < len(condition)
        if truncated:
            logger.info("generation_truncated", anchor_id=pair.anchor_id, stop_reason=generation.stop_reason)
        return tokenizer.decode(generation.tokens), truncated

    outputs = workers.map_ordered(_generate, pairs)
    result = score_texts(pairs, [text for text, _ in outputs], [flag for _, flag in outputs])
    logger.info("qa_scored", samples=len(pairs), bleu1=result.aggregates.bleu1, rouge_l=result.aggregates.rougeL)
    return result


__all__ = ["QAPair", "QAResult", "QAAggregates", "QASampleResult", "score_qa", "score_texts"]
