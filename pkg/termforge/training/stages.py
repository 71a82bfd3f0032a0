from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np

from termforge.augment.records import SentenceQCA, TokenQCA
from termforge.core.errors import ValidationFailure
from termforge.core.logging import get_logger
from termforge.core.manifest import derive_seed
from termforge.core.workers import BaseWorkerBackend, ImmediateBackend
from termforge.losses.contrastive import contrastive_margin, sen_loss
from termforge.losses.sequence import LossResult, sft_loss
from termforge.losses.token import tok_loss
from termforge.model.tinylm import TinyLM, embed_sequence
from termforge.model.tokenizer import Tokenizer

from .config import StageName, TrainConfig
from .data import EncodedSentenceSample, EncodeReport, sen_items, sft_items, shuffled_batches, tok_items
from .optimizer import AdamW

logger = get_logger(component="training")

Item = TypeVar("Item")


@dataclass(slots=True)
class StageResult:
    """Outcome of one stage; ``curve[e]`` is the mean per-sample loss of epoch ``e``."""

    name: StageName
    curve: list[float] = field(default_factory=list)
    steps: int = 0
    samples: int = 0
    seconds: float = 0.0
    skipped: dict[str, int] = field(default_factory=dict)


def run_stage(
    model: TinyLM,
    name: StageName,
    items: Sequence[Item],
    loss_fn: Callable[[TinyLM, Item], LossResult],
    config: TrainConfig,
    workers: Optional[BaseWorkerBackend] = None,
) -> StageResult:
    """Seeded shuffled mini-batches of summed per-sample losses, one optimizer step per batch.

    Per-sample passes may run on ``workers``; gradients are reduced in batch order, so results do not depend on
    scheduling.
    """
    if not items:
        raise ValidationFailure("empty_dataset", stage=name)
    workers = workers or ImmediateBackend()
    rng = np.random.default_rng(derive_seed(config.seed, f"train.{name}"))
    batches_per_epoch = math.ceil(len(items) / config.batch_size)
    optimizer = AdamW.from_config(model.params, config, total_steps=batches_per_epoch * config.epochs_per_stage)
    result = StageResult(name=name, samples=len(items))
    started = time.perf_counter()
    logger.info("stage_started", stage=name, samples=len(items), steps=optimizer.total_steps)

    for epoch in range(config.epochs_per_stage):
        epoch_loss = 0.0
        for batch in shuffled_batches(len(items), config.batch_size, rng):
            losses = workers.map_ordered(lambda index: loss_fn(model, items[index]), batch)
            total = LossResult()
            for loss in losses:
                total.add(loss)
            if not math.isfinite(total.loss):
                raise ValidationFailure("non_finite_loss", stage=name, epoch=epoch)
            optimizer.step(total.grads)
            epoch_loss += total.loss
        mean_loss = epoch_loss / len(items)
        result.curve.append(mean_loss)
        logger.info("epoch_finished", stage=name, epoch=epoch, mean_loss=mean_loss)

    model.check_finite()
    result.steps = optimizer.steps_taken
    result.seconds = time.perf_counter() - started
    logger.info("stage_finished", stage=name, steps=result.steps, final_loss=result.curve[-1])
    return result


def _encoded(name: StageName, items: list, report: EncodeReport) -> list:
    if not items:
        raise ValidationFailure("no_trainable_samples", stage=name, skipped=report.total)
    return items


def sft_stage(
    model: TinyLM,
    tokenizer: Tokenizer,
    q_sen: Sequence[SentenceQCA],
    q_tok: Sequence[TokenQCA],
    config: TrainConfig,
    workers: Optional[BaseWorkerBackend] = None,
) -> StageResult:
    """Supervised fine-tuning on every sample of both datasets."""
    if not q_sen and not q_tok:
        raise ValidationFailure("empty_dataset", stage="sft")
    report = EncodeReport()
    options_seed = derive_seed(config.seed, "train.sft.options")
    pairs = _encoded("sft", sft_items(tokenizer, q_sen, q_tok, model.config.max_len, report, options_seed), report)
    result = run_stage(model, "sft", pairs, lambda m, pair: sft_loss(m, [(pair.x, pair.y)]), config, workers)
    result.skipped = report.skipped
    return result


def sen_stage(
    model: TinyLM,
    tokenizer: Tokenizer,
    q_sen: Sequence[SentenceQCA],
    config: TrainConfig,
    workers: Optional[BaseWorkerBackend] = None,
) -> StageResult:
    """Sentence-level contrastive learning over bidirectional embeddings."""
    if not q_sen:
        raise ValidationFailure("empty_dataset", stage="sen")
    report = EncodeReport()
    samples = _encoded("sen", sen_items(tokenizer, q_sen, model.config.max_len, report), report)
    result = run_stage(
        model,
        "sen",
        samples,
        lambda m, s: sen_loss(m, s.question, s.answer, s.negatives, config.tau),
        config,
        workers,
    )
    result.skipped = report.skipped
    return result


def tok_stage(
    model: TinyLM,
    tokenizer: Tokenizer,
    q_tok: Sequence[TokenQCA],
    config: TrainConfig,
    workers: Optional[BaseWorkerBackend] = None,
) -> StageResult:
    """Token-level contrastive learning: likelihood of the declarative, suppression of each swapped-in term."""
    if not q_tok:
        raise ValidationFailure("empty_dataset", stage="tok")
    report = EncodeReport()
    samples = _encoded("tok", tok_items(tokenizer, q_tok, model.config.max_len, report), report)
    result = run_stage(model, "tok", samples, tok_loss, config, workers)
    result.skipped = report.skipped
    return result


def embedding_margin(model: TinyLM, samples: Sequence[EncodedSentenceSample]) -> float:
    """Mean positive minus mean negative cosine between question and option embeddings."""
    triples = [
        (
            embed_sequence(model, sample.question),
            embed_sequence(model, sample.answer),
            [embed_sequence(model, negative) for negative in sample.negatives],
        )
        for sample in samples
    ]
    return contrastive_margin(triples)


__all__ = ["StageResult", "run_stage", "sft_stage", "sen_stage", "tok_stage", "embedding_margin"]
