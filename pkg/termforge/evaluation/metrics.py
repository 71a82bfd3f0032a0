"""Classification and generation metrics.

All scores are plain floats in [0, 1]. Text is compared as NFKC-normalized whitespace tokens.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

from termforge.core.errors import ValidationFailure


def normalize_tokens(text: str) -> list[str]:
    return unicodedata.normalize("NFKC", text).split()


def ngrams(tokens: Sequence[str], n: int) -> Counter[tuple[str, ...]]:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses: Sequence[Sequence[str]], references: Sequence[Sequence[str]], max_order: int) -> float:
    """Corpus BLEU with pooled clipped counts, uniform weights and the standard brevity penalty.

    Orders above 1 use add-one smoothing on both matches and totals; unigram precision is never smoothed.
    """
    if len(hypotheses) != len(references):
        raise ValidationFailure("hypothesis_reference_count_mismatch")
    if max_order < 1:
        raise ValidationFailure("bleu_order_invalid", max_order=max_order)
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_order + 1):
            hyp_counts = ngrams(hyp, n)
            ref_counts = ngrams(ref, n)
            matches[n - 1] += sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)

    if hyp_len == 0 or matches[0] == 0:
        return 0.0
    log_precision = math.log(matches[0] / totals[0])
    for n in range(2, max_order + 1):
        log_precision += math.log((matches[n - 1] + 1) / (totals[n - 1] + 1))
    brevity = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(log_precision / max_order)


def _f_measure(overlap: int, hyp_len: int, ref_len: int) -> float:
    if overlap == 0 or hyp_len == 0 or ref_len == 0:
        return 0.0
    precision = overlap / hyp_len
    recall = overlap / ref_len
    return 2 * precision * recall / (precision + recall)


def rouge_n(hypothesis: Sequence[str], reference: Sequence[str], n: int = 1) -> float:
    hyp_counts = ngrams(hypothesis, n)
    ref_counts = ngrams(reference, n)
    overlap = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
    return _f_measure(overlap, sum(hyp_counts.values()), sum(ref_counts.values()))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b):
            current.append(previous[j] + 1 if token == other else max(previous[j + 1], current[j]))
        previous = current
    return previous[-1]


def rouge_l(hypothesis: Sequence[str], reference: Sequence[str]) -> float:
    return _f_measure(lcs_length(hypothesis, reference), len(hypothesis), len(reference))


@dataclass(slots=True, frozen=True)
class ClassificationScores:
    accuracy: float
    precision: float
    recall: float
    f1: float


def classification_scores(y_true: Sequence[Hashable], y_pred: Sequence[Hashable]) -> ClassificationScores:
    """Accuracy plus macro precision, recall and F1 over every label seen in either sequence.

    A label with no predicted (or no true) members scores 0 precision (or recall).
    """
    if len(y_true) != len(y_pred):
        raise ValidationFailure("label_count_mismatch")
    if not y_true:
        raise ValidationFailure("empty_sample_set")
    labels = sorted(set(y_true) | set(y_pred), key=repr)
    precisions, recalls, f1s = [], [], []
    for label in labels:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == label and p == label)
        predicted = sum(1 for p in y_pred if p == label)
        actual = sum(1 for t in y_true if t == label)
        precision = tp / predicted if predicted else 0.0
        recall = tp / actual if actual else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    accuracy = sum(1 for t, p in zip(y_true, y_pred) if t == p) / len(y_true)
    return ClassificationScores(
        accuracy=accuracy,
        precision=math.fsum(precisions) / len(labels),
        recall=math.fsum(recalls) / len(labels),
        f1=math.fsum(f1s) / len(labels),
    )


__all__ = [
    "normalize_tokens",
    "ngrams",
    "corpus_bleu",
    "rouge_n",
    "rouge_l",
    "lcs_length",
    "ClassificationScores",
    "classification_scores",
]
