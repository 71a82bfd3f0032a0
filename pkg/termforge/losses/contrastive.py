from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from termforge.core.errors import ValidationFailure
from termforge.embedding.vectors import Vector
from termforge.model.tinylm import TinyLM, backward, embed_with_cache

from .sequence import LossResult


@dataclass(slots=True)
class InfoNCEResult:
    loss: float
    d_pos: float
    d_negs: list[float]


@dataclass(slots=True)
class SenInfoNCEResult:
    """Loss and its gradients with respect to the raw (unnormalized) embeddings."""

    loss: float
    d_q: Vector
    d_a: Vector
    d_negs: list[Vector]
    similarities: list[float]


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise ValidationFailure("temperature_not_positive", tau=tau)


def infonce_from_similarities(pos: float, negs: Sequence[float], tau: float) -> InfoNCEResult:
    """Softmax cross-entropy of the positive against ``{pos} + negs`` at temperature ``tau``.

    The gradient with respect to each similarity ``s_j`` is ``(softmax_j - [j is positive]) / tau``.
    """
    _check_tau(tau)
    if not negs:
        raise ValidationFailure("no_negatives")
    logits = np.asarray([pos, *negs], dtype=np.float64) / tau
    top = float(logits.max())
    shifted = np.exp(logits - top)
    if top == logits[0]:
        loss = math.log1p(float(shifted[1:].sum()))
    else:
        loss = (top - float(logits[0])) + math.log(float(shifted.sum()))
    weights = shifted / shifted.sum()
    return InfoNCEResult(
        loss=loss,
        d_pos=float((weights[0] - 1.0) / tau),
        d_negs=[float(w / tau) for w in weights[1:]],
    )


def _unit(vector: Vector) -> tuple[Vector, float]:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise ValidationFailure("zero_norm_embedding")
    return vector / norm, norm


def _unit_backward(unit: Vector, norm: float, grad: Vector) -> Vector:
    return (grad - unit * float(unit @ grad)) / norm


def sen_infonce(e_q: Vector, e_a: Vector, e_negs: Sequence[Vector], tau: float) -> SenInfoNCEResult:
    """Sentence-level InfoNCE over L2-normalized embeddings; the answer is part of the denominator.

    Raises:
        ValidationFailure: Dimension mismatch, zero-norm vector, no negatives or non-positive ``tau``.
    """
    dim = e_q.shape[-1]
    for vector in (e_a, *e_negs):
        if vector.shape != e_q.shape:
            raise ValidationFailure("dim_mismatch", expected=dim, actual=vector.shape[-1])
    q_hat, q_norm = _unit(e_q)
    a_hat, a_norm = _unit(e_a)
    neg_units = [_unit(vector) for vector in e_negs]

    sim_pos = float(q_hat @ a_hat)
    sim_negs = [float(q_hat @ unit) for unit, _ in neg_units]
    core = infonce_from_similarities(sim_pos, sim_negs, tau)

    dq_hat = core.d_pos * a_hat
    for weight, (unit, _) in zip(core.d_negs, neg_units):
        dq_hat = dq_hat + weight * unit
    return SenInfoNCEResult(
        loss=core.loss,
        d_q=_unit_backward(q_hat, q_norm, dq_hat),
        d_a=_unit_backward(a_hat, a_norm, core.d_pos * q_hat),
        d_negs=[_unit_backward(unit, norm, weight * q_hat) for weight, (unit, norm) in zip(core.d_negs, neg_units)],
        similarities=[sim_pos, *sim_negs],
    )


def sen_loss(
    model: TinyLM,
    question: Sequence[int],
    answer: Sequence[int],
    negatives: Sequence[Sequence[int]],
    tau: float,
    *,
    with_grads: bool = True,
) -> LossResult:
    """InfoNCE over bidirectional final-token embeddings, backpropagated through every embedding pass."""
    e_q, cache_q = embed_with_cache(model, question)
    e_a, cache_a = embed_with_cache(model, answer)
    passes = [embed_with_cache(model, tokens) for tokens in negatives]
    result = sen_infonce(e_q, e_a, [vector for vector, _ in passes], tau)
    out = LossResult(loss=result.loss, extras={"sim_pos": result.similarities[0]})
    if not with_grads:
        return out
    out.add(LossResult(grads=backward(model, cache_q, dhidden=result.d_q)))
    out.add(LossResult(grads=backward(model, cache_a, dhidden=result.d_a)))
    for (_, cache), d_neg in zip(passes, result.d_negs):
        out.add(LossResult(grads=backward(model, cache, dhidden=d_neg)))
    return out


def contrastive_margin(triples: Sequence[tuple[Vector, Vector, Sequence[Vector]]]) -> float:
    """``mean(q.a) - mean(q.c)`` over normalized embeddings; the second mean runs over every negative of every triple."""
    if not triples:
        raise ValidationFailure("empty_margin_set")
    positives: list[float] = []
    negatives: list[float] = []
    for e_q, e_a, e_negs in triples:
        q_hat, _ = _unit(e_q)
        positives.append(float(q_hat @ _unit(e_a)[0]))
        negatives.extend(float(q_hat @ _unit(vector)[0]) for vector in e_negs)
    if not negatives:
        raise ValidationFailure("no_negatives")
    return float(np.mean(positives)) - float(np.mean(negatives))


__all__ = [
    "InfoNCEResult",
    "SenInfoNCEResult",
    "infonce_from_similarities",
    "sen_infonce",
    "sen_loss",
    "contrastive_margin",
]
