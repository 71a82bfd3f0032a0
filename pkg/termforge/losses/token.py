from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from termforge.augment.records import TokenQCA
from termforge.core.errors import SampleRejected
from termforge.core.logging import get_logger
from termforge.model.tinylm import TinyLM
from termforge.model.tokenizer import Tokenizer

from .mix import find_subsequence, mix
from .sequence import LossResult, masked_sequence_loss, truncate_condition

logger = get_logger(component="losses")


@dataclass(slots=True, frozen=True)
class EncodedTokenSample:
    """A token-level sample in token space: condition ``q``, declarative ``t``, answer span and negative spans."""

    q: tuple[int, ...]
    t: tuple[int, ...]
    z_plus: tuple[int, ...]
    negatives: tuple[tuple[int, ...], ...]
    anchor_id: str = ""


def encode_token_sample(tokenizer: Tokenizer, sample: TokenQCA, max_len: int) -> EncodedTokenSample:
    """Tokenize a token-level sample and fit its condition to the context window.

    Raises:
        SampleRejected: The answer is not a contiguous token run of the declarative, a negative encodes to
            nothing, or a mixed sequence alone exceeds ``max_len``.
    """
    t = tokenizer.encode(sample.declarative)
    z_plus = tokenizer.encode(sample.answer)
    if find_subsequence(t, z_plus) < 0:
        raise SampleRejected("answer_not_subsequence", anchor_id=sample.anchor_id, answer=sample.answer)
    negatives = []
    for negative in sample.negatives:
        tokens = tokenizer.encode(negative)
        if not tokens:
            raise SampleRejected("empty_negative_span", anchor_id=sample.anchor_id)
        negatives.append(tuple(tokens))
    longest = max(len(t) - len(z_plus) + len(tokens) for tokens in negatives)
    if longest > max_len:
        raise SampleRejected("declarative_exceeds_max_len", anchor_id=sample.anchor_id, length=longest)
    question = tokenizer.encode(sample.question)
    q = truncate_condition(question, longest, max_len)
    if len(q) < len(question):
        logger.info("condition_truncated", anchor_id=sample.anchor_id, kept=len(q), dropped=len(question) - len(q))
    return EncodedTokenSample(
        q=tuple(q), t=tuple(t), z_plus=tuple(z_plus), negatives=tuple(negatives), anchor_id=sample.anchor_id
    )


def mix_loss(
    model: TinyLM,
    t: Sequence[int],
    z_plus: Sequence[int],
    z_minus: Sequence[int],
    q: Sequence[int],
    *,
    with_grads: bool = True,
) -> LossResult:
    """Likelihood on the kept tokens of ``mix(t, z_plus, z_minus)`` and suppression on the swapped-in span."""
    mixed = mix(t, z_plus, z_minus)
    return masked_sequence_loss(model, q, mixed.tokens, mixed.mask, with_grads=with_grads)


def tok_loss(
    model: TinyLM, sample: EncodedTokenSample, q: Optional[Sequence[int]] = None, *, with_grads: bool = True
) -> LossResult:
    """Sum of :func:`mix_loss` over the sample's negatives, in listed order."""
    condition = sample.q if q is None else q
    total = LossResult()
    for z_minus in sample.negatives:
        total.add(mix_loss(model, sample.t, sample.z_plus, z_minus, condition, with_grads=with_grads))
    return total


__all__ = ["EncodedTokenSample", "encode_token_sample", "mix_loss", "tok_loss"]
