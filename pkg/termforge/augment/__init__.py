"""Graph-driven QCA augmentation: prompts, parsers, generators and dataset files."""

from .clients import ChatCompletionClient, GenerationBackend, OfflineGenerator, RemoteGenerator
from .generate import generate_sentence_qca, generate_sentence_sample, generate_token_qca
from .parsing import parse_sentence_output, parse_token_output
from .pipeline import AugmentResult, augment_corpus, get_generator
from .prompts import render_sentence_prompt, render_token_prompt
from .records import QCASample, RejectionReport, SentenceQCA, TokenQCA, load_dataset, save_dataset

__all__ = [
    "AugmentResult",
    "ChatCompletionClient",
    "GenerationBackend",
    "OfflineGenerator",
    "QCASample",
    "RejectionReport",
    "RemoteGenerator",
    "SentenceQCA",
    "TokenQCA",
    "augment_corpus",
    "generate_sentence_qca",
    "generate_sentence_sample",
    "generate_token_qca",
    "get_generator",
    "load_dataset",
    "parse_sentence_output",
    "parse_token_output",
    "render_sentence_prompt",
    "render_token_prompt",
    "save_dataset",
]
