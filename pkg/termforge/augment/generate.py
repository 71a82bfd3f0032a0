from __future__ import annotations

from typing import Sequence

from termforge.core.errors import SampleRejected, ValidationFailure
from termforge.core.logging import get_logger
from termforge.corpus.records import EntityMention, SentenceRecord
from termforge.graph.types import EntityRef

from .clients import GenerationBackend
from .records import Rejection, RejectionReport, SentenceQCA, TokenQCA, make_sentence_qca, make_token_qca

logger = get_logger(component="augment")


def _split_of(record: SentenceRecord) -> str:
    if record.split == "unassigned":
        raise ValidationFailure("corpus_not_split", record_id=record.id)
    return record.split


def generate_token_qca(
    anchor: SentenceRecord,
    c_anchor: EntityMention,
    c_tok: Sequence[EntityRef],
    backend: GenerationBackend,
    max_negatives: int = 8,
) -> TokenQCA:
    """One token-level sample for ``c_anchor`` with its confusable partners as negatives.

    Negatives are the partner surfaces in candidate order, deduplicated, never equal to the answer and capped at
    ``max_negatives``.
    """
    if not c_tok:
        raise ValidationFailure("empty_token_candidates", anchor_id=anchor.id, term=c_anchor.surface)
    negatives = [
        surface for surface in dict.fromkeys(ref.surface for ref in c_tok) if surface != c_anchor.surface
    ][:max_negatives]
    if not negatives:
        raise SampleRejected("no_distinct_negatives", anchor_id=anchor.id, term=c_anchor.surface)
    output = backend.token_output(anchor, c_anchor)
    return make_token_qca(
        question=output.question,
        answer=c_anchor.surface,
        negatives=tuple(negatives),
        declarative=output.rephrased,
        anchor_id=anchor.id,
        split=_split_of(anchor),
        category=anchor.category,
    )


def generate_sentence_sample(
    anchor: SentenceRecord,
    negative: SentenceRecord,
    backend: GenerationBackend,
    similar: dict[EntityRef, list[EntityRef]] | None = None,
    report: RejectionReport | None = None,
) -> SentenceQCA:
    if negative.split != anchor.split:
        raise ValidationFailure("cross_split_candidate", anchor_id=anchor.id, negative_id=negative.id)
    output = backend.sentence_output(anchor, negative, similar or {})
    if not output.answer_in_position_a:
        logger.warning(
            "correct_choice_not_first", anchor_id=anchor.id, negative_id=negative.id, position=output.correct_index
        )
        if report is not None:
            report.warnings.append(
                Rejection(
                    code="correct_choice_not_first",
                    anchor_id=anchor.id,
                    kind="sen",
                    detail=f"position={output.correct_index}",
                )
            )
    return make_sentence_qca(
        question=output.question,
        answer=output.correct,
        negatives=output.negatives,
        anchor_id=anchor.id,
        negative_id=negative.id,
        split=_split_of(anchor),
        category=anchor.category,
    )


def generate_sentence_qca(
    anchor: SentenceRecord,
    s_sen: Sequence[SentenceRecord],
    backend: GenerationBackend,
    similar: dict[EntityRef, list[EntityRef]] | None = None,
) -> list[SentenceQCA]:
    """One sentence-level sample per confusable sentence, in ``s_sen`` order."""
    if not s_sen:
        raise ValidationFailure("empty_sentence_candidates", anchor_id=anchor.id)
    return [generate_sentence_sample(anchor, negative, backend, similar) for negative in s_sen]


__all__ = ["generate_token_qca", "generate_sentence_qca", "generate_sentence_sample"]
