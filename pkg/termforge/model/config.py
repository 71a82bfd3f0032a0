from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

AttentionMode = Literal["causal", "bidirectional"]
TokenizerMode = Literal["byte", "whitespace_char_fallback"]


class ModelConfig(BaseModel):
    """Shape and mode of a TinyLM. Desk-scale defaults.

    ``attention_mode`` is the mode of language-modelling passes (training targets, generation); embedding
    extraction always switches the same weights to bidirectional attention.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    d_model: int = Field(default=64, gt=0)
    n_layers: int = Field(default=2, gt=0)
    n_heads: int = Field(default=4, gt=0)
    d_ff: int = Field(default=256, gt=0)
    max_len: int = Field(default=256, gt=1)
    vocab_size: int = Field(default=260, gt=0)
    attention_mode: AttentionMode = "causal"
    tokenizer_mode: TokenizerMode = "byte"
    tokenizer_min_count: int = Field(default=2, ge=1)
    init_std: float = Field(default=0.02, gt=0)

    @model_validator(mode="after")
    def _heads_divide_width(self) -> "ModelConfig":
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})")
        return self

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads


__all__ = ["ModelConfig", "AttentionMode", "TokenizerMode"]
