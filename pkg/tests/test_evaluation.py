from __future__ import annotations

import json
import math

import numpy as np
import pytest

from termforge.augment.records import SentenceQCA
from termforge.core.errors import ValidationFailure
from termforge.core.workers import ThreadBackend
from termforge.evaluation.qa import QAPair, score_qa
from termforge.evaluation.qca import get_scorer, loglikelihood_scorer, option_order, score_choices, score_qca
from termforge.evaluation.results import EvalResults, dumps_results
from termforge.evaluation.test_sets import make_test_sets
from termforge.model.tokenizer import BYTE_VOCAB_SIZE, Tokenizer
from tests.conftest import sentence_samples, token_samples


def _many(n: int) -> list[SentenceQCA]:
    return [
        SentenceQCA(
            question=f"question {i}",
            answer=f"right {i}",
            negatives=(f"wrong {i} a", f"wrong {i} b", f"wrong {i} c"),
            anchor_id=f"a{i}",
            negative_id=f"n{i}",
            split="test",
            category="even" if i % 2 == 0 else "odd",
        )
        for i in range(n)
    ]


def _oracle(question, options):
    return [1.0 if option.startswith("right") else 0.0 for option in options]


def test_perfect_scorer_scores_one():
    result = score_choices(_many(40), _oracle, seed=0)
    aggregates = result.aggregates
    assert (aggregates.accuracy, aggregates.precision, aggregates.recall, aggregates.f1) == (1.0, 1.0, 1.0, 1.0)
    assert all(r.correct for r in result.per_sample)
    assert result.by_category["even"].samples == 20
    assert result.by_category["odd"].accuracy == 1.0


def test_random_scorer_is_near_chance():
    rng = np.random.default_rng(0)
    result = score_choices(_many(10_000), lambda q, options: rng.random(len(options)), seed=0)
    assert result.aggregates.accuracy == pytest.approx(0.25, abs=0.02)
    positions = np.bincount([r.answer_position for r in result.per_sample], minlength=4) / 10_000
    np.testing.assert_allclose(positions, 0.25, atol=0.02)


def test_ties_pick_the_first_shown_option():
    samples = _many(200)
    result = score_choices(samples, lambda q, options: [0.5] * len(options), seed=3)
    assert all(r.chosen == 0 for r in result.per_sample)
    expected = sum(1 for r in result.per_sample if r.answer_position == 0) / len(samples)
    assert result.aggregates.accuracy == expected


def test_option_order_depends_only_on_sample_and_seed():
    samples = _many(30)
    forward_order = {s.anchor_id: option_order(s, 5) for s in samples}
    assert {s.anchor_id: option_order(s, 5) for s in reversed(samples)} == forward_order
    assert all(sorted(order) == [0, 1, 2, 3] for order in forward_order.values())
    assert any(option_order(s, 6) != forward_order[s.anchor_id] for s in samples)

    first = score_choices(samples, _oracle, seed=5)
    second = score_choices(list(reversed(samples)), _oracle, seed=5)
    assert sorted(r.answer_position for r in first.per_sample) == sorted(r.answer_position for r in second.per_sample)


def test_token_samples_are_scored_with_their_own_option_count():
    result = score_choices(token_samples("test"), lambda q, options: [len(o) for o in options], seed=0)
    assert [len(r.scores) for r in result.per_sample] == [2, 3, 2, 2]
    assert {r.kind for r in result.per_sample} == {"tok"}


def test_scorer_contract_errors():
    with pytest.raises(ValidationFailure) as excinfo:
        score_choices([], _oracle, seed=0)
    assert excinfo.value.code == "empty_sample_set"
    with pytest.raises(ValidationFailure) as excinfo:
        score_choices(_many(1), lambda q, options: [1.0], seed=0)
    assert excinfo.value.code == "scorer_output_length"
    with pytest.raises(ValidationFailure) as excinfo:
        score_choices(_many(1), lambda q, options: [math.nan] * 4, seed=0)
    assert excinfo.value.code == "non_finite_score"


def test_unknown_scoring_mode(tiny_model):
    with pytest.raises(ValidationFailure) as excinfo:
        get_scorer("bm25", tiny_model, Tokenizer())
    assert excinfo.value.code == "unknown_scoring_mode"


def _biased(model, token: int):
    model.params["head.W"][:] = 0.0
    model.params["head.b"][:] = 0.0
    model.params["head.b"][token] = 5.0
    return model


def test_loglikelihood_scores_include_the_end_token(tiny_model):
    scorer = loglikelihood_scorer(_biased(tiny_model, ord("a")), Tokenizer())
    log_z = math.log(math.exp(5.0) + BYTE_VOCAB_SIZE - 1)
    low, high = scorer("q", ["bbb", "aaa"])
    assert low == pytest.approx(-log_z, rel=1e-9)
    assert high == pytest.approx(3.75 - log_z, rel=1e-9)


@pytest.mark.parametrize("mode", ["embedding_similarity", "loglikelihood"])
def test_model_scoring_modes(model_factory, mode):
    model = model_factory(max_len=64, init_std=0.3)
    samples = sentence_samples("test")
    serial = score_qca(model, Tokenizer(), samples, mode, seed=1)
    threaded = score_qca(model, Tokenizer(), samples, mode, seed=1, workers=ThreadBackend(3))
    assert serial == threaded
    assert serial.mode == mode
    assert serial.aggregates.samples == 4
    for result in serial.per_sample:
        assert len(result.scores) == 4
        if mode == "embedding_similarity":
            assert all(-1.0 - 1e-12 <= score <= 1.0 + 1e-12 for score in result.scores)
        else:
            assert all(score < 0.0 for score in result.scores)


def test_qa_generation_scoring(tiny_model):
    model = _biased(tiny_model, ord("a"))
    pairs = [QAPair("q", "aaa", "p0", "sen"), QAPair("x" * 40, "a b", "p1", "tok")]
    result = score_qa(model, Tokenizer(), pairs, max_new=3)
    first, second = result.per_sample
    assert first.generated == "aaa"
    assert first.rouge1 == 1.0 and not first.truncated
    assert second.generated == "a"
    assert second.truncated
    assert result.aggregates.truncated == 1
    assert result.aggregates.bleu1 == pytest.approx(math.exp(1.0 - 3 / 2))

    with pytest.raises(ValidationFailure) as excinfo:
        score_qa(model, Tokenizer(), [QAPair("q", "   ")])
    assert excinfo.value.code == "empty_reference"
    with pytest.raises(ValidationFailure) as excinfo:
        score_qa(model, Tokenizer(), [])
    assert excinfo.value.code == "empty_sample_set"


def test_make_test_sets_keeps_only_the_requested_split():
    q_sen = sentence_samples("train")[:2] + sentence_samples("test")[2:]
    q_tok = token_samples("test")[:1] + token_samples("train")[1:]
    sets = make_test_sets(q_sen, q_tok)
    assert [s.anchor_id for s in sets.qca] == ["s2", "s3", "t0"]
    assert [p.reference for p in sets.qa] == [q_sen[2].answer, q_sen[3].answer, q_tok[0].declarative]
    assert [p.kind for p in sets.qa] == ["sen", "sen", "tok"]
    assert make_test_sets(q_sen, q_tok, split="nothing").qca == []


def test_results_file_is_canonical():
    qca = score_choices(_many(4), _oracle, seed=0, mode="embedding_similarity")
    results = EvalResults(config={"seed": 0}, mode="embedding_similarity", qca=qca)
    text = dumps_results(results)
    payload = json.loads(text)
    assert text.endswith("\n")
    assert list(payload) == sorted(payload)
    assert "mode" not in payload["qca"]
    assert payload["qa"] is None
    assert payload["qca"]["aggregates"]["accuracy"] == 1.0
