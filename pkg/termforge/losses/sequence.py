from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from termforge.core.errors import ValidationFailure
from termforge.model.layers import Array
from termforge.model.tinylm import TinyLM, backward, forward

PROB_EPS = 1e-12


@dataclass(slots=True)
class LossResult:
    """Summed loss, its parameter gradients and the number of scored target tokens."""

    loss: float = 0.0
    grads: Optional[dict[str, Array]] = None
    n_tokens: int = 0
    extras: dict[str, float] = field(default_factory=dict)

    def add(self, other: "LossResult") -> None:
        self.loss += other.loss
        self.n_tokens += other.n_tokens
        if other.grads is not None:
            if self.grads is None:
                self.grads = {name: value.copy() for name, value in other.grads.items()}
            else:
                for name, value in other.grads.items():
                    self.grads[name] += value


def truncate_condition(condition: Sequence[int], target_len: int, max_len: int) -> list[int]:
    """Keep the trailing part of ``condition`` so that ``len(condition) + target_len <= max_len``."""
    room = max_len - target_len
    if room < 0:
        raise ValidationFailure("target_exceeds_max_len", target_len=target_len, max_len=max_len)
    return list(condition[-room:]) if room else []


def masked_sequence_loss(
    model: TinyLM,
    condition: Sequence[int],
    tokens: Sequence[int],
    mask: Sequence[int],
    *,
    with_grads: bool = True,
) -> LossResult:
    """Mixed likelihood/suppression loss over one target sequence.

    Positions with mask 1 add ``-log p(token)``; positions with mask 0 add ``-log(1 - p(token))``. Probabilities are
    clamped to ``[eps, 1 - eps]`` first, and a clamped position contributes no gradient.
    """
    if len(mask) != len(tokens):
        raise ValidationFailure("mask_length_mismatch", tokens=len(tokens), mask=len(mask))
    probs, cache = forward(model, condition, tokens)
    rows = np.arange(len(tokens))
    targets = np.asarray(tokens, dtype=np.int64)
    picked = probs[rows, targets]
    clamped = np.clip(picked, PROB_EPS, 1.0 - PROB_EPS)
    active = (picked > PROB_EPS) & (picked < 1.0 - PROB_EPS)

    loss = 0.0
    for j, keep in enumerate(mask):
        loss -= math.log(clamped[j]) if keep else math.log1p(-clamped[j])
    result = LossResult(loss=loss, n_tokens=len(tokens))
    if not with_grads:
        return result

    onehot = np.zeros_like(probs)
    onehot[rows, targets] = 1.0
    keep = np.asarray(mask, dtype=bool)
    dlogits = np.where(
        keep[:, None],
        probs - onehot,
        picked[:, None] * (onehot - probs) / (1.0 - clamped)[:, None],
    )
    dlogits[~active] = 0.0
    result.grads = backward(model, cache, dlogits=dlogits)
    return result


def sft_loss(model: TinyLM, batch: Sequence[tuple[Sequence[int], Sequence[int]]], *, with_grads: bool = True) -> LossResult:
    """Summed negative log-likelihood of each ``y`` given its ``x``.

    Args:
        model: The language model.
        batch: ``(x_q, y_q)`` token pairs.
        with_grads: Skip the backward pass when False.

    Returns:
        Loss and gradients summed over the batch in order.
    """
    if not batch:
        raise ValidationFailure("empty_batch")
    total = LossResult()
    for condition, target in batch:
        total.add(masked_sequence_loss(model, condition, target, [1] * len(target), with_grads=with_grads))
    return total


__all__ = ["LossResult", "PROB_EPS", "masked_sequence_loss", "sft_loss", "truncate_condition"]
