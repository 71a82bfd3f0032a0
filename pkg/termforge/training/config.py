from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

StageName = Literal["sft", "sen", "tok"]
STAGE_ORDER: tuple[StageName, ...] = ("sft", "sen", "tok")

# Ablation presets: which stages run, always in STAGE_ORDER.
ABLATIONS: dict[str, tuple[StageName, ...]] = {
    "full": ("sft", "sen", "tok"),
    "no_tok": ("sft", "sen"),
    "no_sen": ("sft", "tok"),
    "no_cl": ("sft",),
    "no_sft": ("sen", "tok"),
}


class TrainConfig(BaseModel):
    """Optimisation settings for the three-stage pipeline.

    The learning-rate default targets the desk-scale model; full-size backbones are
    usually tuned within [5e-6, 5e-5].
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    lr: float = Field(default=1e-3, ge=0.0)
    tau: float = Field(default=0.05, gt=0.0)
    batch_size: int = Field(default=16, ge=1)
    epochs_per_stage: int = Field(default=3, ge=1)
    seed: int = 0
    grad_clip: Optional[float] = Field(default=None, gt=0.0)
    weight_decay: float = Field(default=0.01, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    stages: tuple[StageName, ...] = STAGE_ORDER

    @field_validator("stages", mode="before")
    @classmethod
    def _expand_preset(cls, value: object) -> object:
        if isinstance(value, str):
            if value not in ABLATIONS:
                raise ValueError(f"unknown stage preset {value!r}; expected one of {sorted(ABLATIONS)}")
            return ABLATIONS[value]
        return value

    @field_validator("stages")
    @classmethod
    def _fixed_order(cls, value: tuple[StageName, ...]) -> tuple[StageName, ...]:
        if not value:
            raise ValueError("at least one stage must run")
        if len(set(value)) != len(value):
            raise ValueError("stages must not repeat")
        ordered = tuple(stage for stage in STAGE_ORDER if stage in value)
        if ordered != tuple(value):
            raise ValueError(f"stages must follow the order {STAGE_ORDER}")
        return ordered


__all__ = ["TrainConfig", "StageName", "STAGE_ORDER", "ABLATIONS"]
