from __future__ import annotations

import json
import math

import pytest

from termforge.core.errors import ValidationFailure
from termforge.evaluation.metrics import (
    classification_scores,
    corpus_bleu,
    lcs_length,
    ngrams,
    normalize_tokens,
    rouge_l,
    rouge_n,
)
from termforge.evaluation.qa import QAPair, score_texts
from tests.conftest import FIXTURES


@pytest.fixture(scope="module")
def golden() -> dict:
    return json.loads((FIXTURES / "metrics" / "qa_golden.json").read_text(encoding="utf-8"))


def test_short_hypothesis_example():
    hyp, ref = normalize_tokens("the cat"), normalize_tokens("the cat sat")
    assert corpus_bleu([hyp], [ref], 1) == pytest.approx(math.exp(-0.5), rel=1e-12)
    assert corpus_bleu([hyp], [ref], 4) == pytest.approx(0.6065306597126334, rel=1e-12)
    assert rouge_n(hyp, ref, 1) == pytest.approx(0.8)
    assert rouge_l(hyp, ref) == pytest.approx(0.8)


def test_golden_set_per_sample(golden):
    for row in golden["pairs"]:
        hyp, ref = normalize_tokens(row["hypothesis"]), normalize_tokens(row["reference"])
        assert rouge_n(hyp, ref, 1) == pytest.approx(row["rouge1"], abs=1e-12), row
        assert rouge_l(hyp, ref) == pytest.approx(row["rougeL"], abs=1e-12), row


def test_golden_set_aggregates(golden):
    pairs = [QAPair(question="q", reference=row["reference"]) for row in golden["pairs"]]
    generations = [row["hypothesis"] for row in golden["pairs"]]
    result = score_texts(pairs, generations, [False] * len(pairs))
    counts = golden["counts"]
    matches, totals = counts["matches"], counts["totals"]
    precision = matches[0] / totals[0]
    for n in range(1, 4):
        precision *= (matches[n] + 1) / (totals[n] + 1)
    brevity = math.exp(1.0 - counts["ref_len"] / counts["hyp_len"])

    assert result.aggregates.samples == 10
    assert result.aggregates.bleu1 == pytest.approx(golden["bleu1"], abs=1e-9)
    assert result.aggregates.bleu1 == pytest.approx(brevity * matches[0] / totals[0], rel=1e-12)
    assert result.aggregates.bleu4 == pytest.approx(golden["bleu4"], abs=1e-9)
    assert result.aggregates.bleu4 == pytest.approx(brevity * precision**0.25, rel=1e-12)
    assert result.aggregates.rouge1 == pytest.approx(golden["rouge1"], abs=1e-9)
    assert result.aggregates.rougeL == pytest.approx(golden["rougeL"], abs=1e-9)
    assert result.aggregates.truncated == 0


def test_bleu_edge_cases():
    assert corpus_bleu([[]], [["a"]], 4) == 0.0
    assert corpus_bleu([["x", "y"]], [["a", "b"]], 2) == 0.0
    assert corpus_bleu([["a", "b", "c"]], [["a", "b"]], 1) == pytest.approx(2 / 3)
    with pytest.raises(ValidationFailure) as excinfo:
        corpus_bleu([["a"]], [], 1)
    assert excinfo.value.code == "hypothesis_reference_count_mismatch"
    with pytest.raises(ValidationFailure) as excinfo:
        corpus_bleu([["a"]], [["a"]], 0)
    assert excinfo.value.code == "bleu_order_invalid"


def test_token_helpers():
    assert normalize_tokens("  ｒｅｓｅｒｖｅ\tratio \n") == ["reserve", "ratio"]
    assert ngrams(["a", "b", "a", "b"], 2) == {("a", "b"): 2, ("b", "a"): 1}
    assert ngrams(["a"], 2) == {}
    assert lcs_length(list("abcbdab"), list("bdcaba")) == 4
    assert lcs_length([], ["a"]) == 0
    assert rouge_n([], ["a"]) == 0.0


def test_macro_classification_scores():
    scores = classification_scores([0, 0, 1, 1], [0, 1, 1, 1])
    assert scores.accuracy == 0.75
    assert scores.precision == pytest.approx(5 / 6)
    assert scores.recall == pytest.approx(0.75)
    assert scores.f1 == pytest.approx(11 / 15)


def test_labels_only_predicted_count_against_the_macro_average():
    scores = classification_scores([0, 0], [0, 2])
    assert scores.accuracy == 0.5
    assert scores.precision == pytest.approx(0.5)
    assert scores.recall == pytest.approx(0.25)
    assert scores.f1 == pytest.approx(1 / 3)


def test_classification_errors():
    with pytest.raises(ValidationFailure) as excinfo:
        classification_scores([], [])
    assert excinfo.value.code == "empty_sample_set"
    with pytest.raises(ValidationFailure) as excinfo:
        classification_scores([0], [0, 1])
    assert excinfo.value.code == "label_count_mismatch"
