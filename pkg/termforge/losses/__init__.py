"""Training objectives with exact gradients: SFT, Mix/suppression, token-level and sentence-level contrastive."""

from .contrastive import (
    InfoNCEResult,
    SenInfoNCEResult,
    contrastive_margin,
    infonce_from_similarities,
    sen_infonce,
    sen_loss,
)
from .mix import MixedSequence, find_subsequence, mix
from .sequence import PROB_EPS, LossResult, masked_sequence_loss, sft_loss, truncate_condition
from .token import EncodedTokenSample, encode_token_sample, mix_loss, tok_loss

__all__ = [
    "InfoNCEResult",
    "SenInfoNCEResult",
    "contrastive_margin",
    "infonce_from_similarities",
    "sen_infonce",
    "sen_loss",
    "MixedSequence",
    "find_subsequence",
    "mix",
    "PROB_EPS",
    "LossResult",
    "masked_sequence_loss",
    "sft_loss",
    "truncate_condition",
    "EncodedTokenSample",
    "encode_token_sample",
    "mix_loss",
    "tok_loss",
]
