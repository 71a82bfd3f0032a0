"""Desk-scale autoregressive transformer with exact numpy gradients."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ModelConfig
from .tinylm import (
    ForwardCache,
    Generation,
    TinyLM,
    backward,
    embed_sequence,
    embed_with_cache,
    forward,
    greedy_generate,
    input_gradient,
)
from .tokenizer import Tokenizer

__all__ = [
    "Checkpoint",
    "ForwardCache",
    "Generation",
    "ModelConfig",
    "TinyLM",
    "Tokenizer",
    "backward",
    "embed_sequence",
    "embed_with_cache",
    "forward",
    "greedy_generate",
    "input_gradient",
    "load_checkpoint",
    "save_checkpoint",
]
