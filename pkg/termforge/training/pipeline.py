from __future__ import annotations

from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from termforge.augment.records import SentenceQCA, TokenQCA
from termforge.core.errors import ValidationFailure
from termforge.core.logging import get_logger
from termforge.core.workers import BaseWorkerBackend
from termforge.model.checkpoint import Checkpoint, save_checkpoint

from .config import STAGE_ORDER, StageName, TrainConfig
from .data import EncodeReport, sen_items
from .stages import StageResult, embedding_margin, sen_stage, sft_stage, tok_stage

logger = get_logger(component="training")


class StageReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: StageName
    curve: list[float]
    steps: int
    samples: int
    seconds: float
    skipped: dict[str, int] = Field(default_factory=dict)
    checkpoint: str


class MarginReport(BaseModel):
    model_config = ConfigDict(extra="forbid")

    before: float
    after: float
    samples: int


class TrainReport(BaseModel):
    """What a training run did, in execution order."""

    model_config = ConfigDict(extra="forbid")

    stage_order: list[StageName] = Field(default_factory=list)
    skipped_stages: list[StageName] = Field(default_factory=list)
    stages: list[StageReport] = Field(default_factory=list)
    completed_stages: list[StageName] = Field(default_factory=list)
    final_checkpoint: Optional[str] = None
    resumed_from: Optional[str] = None
    margin: Optional[MarginReport] = None
    config: dict[str, Any] = Field(default_factory=dict)


def checkpoint_name(stage: StageName) -> str:
    return f"checkpoints/stage_{STAGE_ORDER.index(stage) + 1}_{stage}.ckpt.json"


def pending_stages(config: TrainConfig, completed: Sequence[str]) -> list[StageName]:
    """Configured stages not yet in the checkpoint lineage; raises if one would run before a completed stage."""
    unknown = [stage for stage in completed if stage not in STAGE_ORDER]
    if unknown:
        raise ValidationFailure("unknown_completed_stage", stages=unknown)
    last_done = max((STAGE_ORDER.index(stage) for stage in completed), default=-1)
    pending = [stage for stage in config.stages if stage not in completed]
    for stage in pending:
        if STAGE_ORDER.index(stage) < last_done:
            raise ValidationFailure("stage_order_violation", stage=stage, completed=list(completed))
    return pending


def run_pipeline(
    checkpoint: Checkpoint,
    q_sen: Sequence[SentenceQCA],
    q_tok: Sequence[TokenQCA],
    config: TrainConfig,
    output_dir: Path,
    *,
    workers: Optional[BaseWorkerBackend] = None,
    resumed_from: Optional[str] = None,
) -> TrainReport:
    """Run the configured stages strictly in sft, sen, tok order, checkpointing after each one.

    ``checkpoint`` is either a freshly initialised model or a stage checkpoint to resume from; stages already in
    its ``completed_stages`` are not repeated. The model is updated in place.
    """
    model = checkpoint.model
    tokenizer = checkpoint.tokenizer
    completed: list[StageName] = list(checkpoint.completed_stages)
    pending = pending_stages(config, completed)
    report = TrainReport(
        skipped_stages=[stage for stage in STAGE_ORDER if stage not in config.stages],
        completed_stages=list(completed),
        resumed_from=resumed_from,
        config=config.model_dump(mode="json"),
    )
    if not pending:
        logger.info("nothing_to_train", completed=completed)
        return report

    for stage in pending:
        if stage == "sft":
            result: StageResult = sft_stage(model, tokenizer, q_sen, q_tok, config, workers)
        elif stage == "sen":
            margin_samples = sen_items(tokenizer, q_sen, model.config.max_len, EncodeReport())
            before = embedding_margin(model, margin_samples) if margin_samples else None
            result = sen_stage(model, tokenizer, q_sen, config, workers)
            if before is not None:
                after = embedding_margin(model, margin_samples)
                report.margin = MarginReport(before=before, after=after, samples=len(margin_samples))
                logger.info("embedding_margin", before=before, after=after)
        else:
            result = tok_stage(model, tokenizer, q_tok, config, workers)

        completed.append(stage)
        name = checkpoint_name(stage)
        save_checkpoint(output_dir / name, Checkpoint(model=model, tokenizer=tokenizer, completed_stages=list(completed)))
        report.stage_order.append(stage)
        report.completed_stages = list(completed)
        report.final_checkpoint = name
        report.stages.append(
            StageReport(
                name=stage,
                curve=result.curve,
                steps=result.steps,
                samples=result.samples,
                seconds=result.seconds,
                skipped=result.skipped,
                checkpoint=name,
            )
        )
    return report


__all__ = ["TrainReport", "StageReport", "MarginReport", "run_pipeline", "pending_stages", "checkpoint_name"]
