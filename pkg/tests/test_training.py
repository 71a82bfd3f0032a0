from __future__ import annotations

import math

import numpy as np
import pytest

from termforge.augment.records import option_order
from termforge.core.errors import SampleRejected, ValidationFailure
from termforge.core.workers import ThreadBackend
from termforge.losses.sequence import sft_loss
from termforge.model.checkpoint import Checkpoint, load_checkpoint
from termforge.model.config import ModelConfig
from termforge.model.tokenizer import EOS_ID, Tokenizer
from termforge.training.config import TrainConfig
from termforge.training.data import (
    EncodeReport,
    SFTPair,
    encode_sft_pair,
    fit_tokenizer,
    sft_prompt,
    shuffled_batches,
    tok_items,
)
from termforge.training.optimizer import AdamW, global_norm, linear_decay
from termforge.training.pipeline import checkpoint_name, pending_stages, run_pipeline
from termforge.training.stages import run_stage, sen_stage, sft_stage, tok_stage
from tests.conftest import assert_params_equal, sentence_samples, token_samples


def _params():
    return {"w": np.array([1.0, -2.0, 3.0]), "b": np.array([0.5])}


def test_first_adamw_step_is_a_sign_step():
    params = _params()
    grads = {"w": np.array([0.3, -4.0, 1e-3]), "b": np.array([2.0])}
    expected = {name: value - 0.1 * grads[name] / (np.abs(grads[name]) + 1e-8) for name, value in params.items()}
    info = AdamW(params, lr=0.1, total_steps=10, weight_decay=0.0).step(grads)
    for name in params:
        np.testing.assert_allclose(params[name], expected[name], rtol=1e-12, atol=0)
    assert info.step == 1
    assert info.lr == 0.1
    assert info.grad_norm == pytest.approx(math.sqrt(0.09 + 16 + 1e-6 + 4))
    assert not info.clipped


def test_zero_learning_rate_changes_nothing():
    params = _params()
    before = {name: value.copy() for name, value in params.items()}
    optimizer = AdamW(params, lr=0.0, total_steps=3, weight_decay=0.1)
    for _ in range(3):
        optimizer.step({"w": np.ones(3), "b": np.ones(1)})
    for name in params:
        assert np.array_equal(params[name], before[name])


def test_decoupled_weight_decay_with_zero_gradient():
    params = _params()
    AdamW(params, lr=0.1, total_steps=1, weight_decay=0.5).step({"w": np.zeros(3), "b": np.zeros(1)})
    np.testing.assert_allclose(params["w"], np.array([1.0, -2.0, 3.0]) * 0.95, rtol=1e-12)


def test_clipping_and_schedule():
    params = _params()
    optimizer = AdamW(params, lr=1.0, total_steps=4, weight_decay=0.0, grad_clip=1.0)
    infos = [optimizer.step({"w": np.array([6.0, 8.0, 0.0]), "b": np.zeros(1)}) for _ in range(4)]
    assert all(info.clipped for info in infos)
    assert infos[0].grad_norm == 10.0
    assert [info.lr for info in infos] == [1.0, 0.75, 0.5, 0.25]
    assert linear_decay(2.0, 1, 4) == 1.5
    with pytest.raises(ValidationFailure) as excinfo:
        linear_decay(1.0, 0, 0)
    assert excinfo.value.code == "total_steps_not_positive"
    assert global_norm({"a": np.array([3.0]), "b": np.array([4.0])}) == 5.0


def test_optimizer_rejects_bad_gradients():
    optimizer = AdamW(_params(), lr=0.1, total_steps=2)
    with pytest.raises(ValidationFailure) as excinfo:
        optimizer.step({"w": np.zeros(3)})
    assert excinfo.value.code == "gradient_names_mismatch"
    with pytest.raises(ValidationFailure) as excinfo:
        optimizer.step({"w": np.array([np.nan, 0.0, 0.0]), "b": np.zeros(1)})
    assert excinfo.value.code == "non_finite_gradient"


def test_sft_prompt_does_not_pin_the_answer_to_one_letter():
    positions = set()
    for sample in sentence_samples():
        for seed in range(10):
            position = option_order(sample, seed).index(0)
            assert sft_prompt(sample, seed).splitlines()[1 + position] == f"{'ABCD'[position]}. {sample.answer}"
            positions.add(position)
    assert len(positions) > 1


def test_shuffled_batches_cover_every_index():
    batches = shuffled_batches(10, 4, np.random.default_rng(0))
    assert [len(batch) for batch in batches] == [4, 4, 2]
    assert sorted(i for batch in batches for i in batch) == list(range(10))


def test_sft_pairs():
    tokenizer = Tokenizer()
    sentence = sentence_samples()[0]
    order = option_order(sentence, 3)
    choices = "\n".join(f"{'ABCD'[k]}. {sentence.options[i]}" for k, i in enumerate(order))
    assert sft_prompt(sentence, 3) == f"Who signs the minutes?\n{choices}"
    token = token_samples()[0]
    pair = encode_sft_pair(tokenizer, token, 32)
    assert pair.y == (*tokenizer.encode("reserve ratio"), EOS_ID)
    assert len(pair.x) + len(pair.y) <= 32
    assert list(pair.x) == tokenizer.encode(token.question)[-len(pair.x) :]
    with pytest.raises(SampleRejected) as excinfo:
        encode_sft_pair(tokenizer, token, 10)
    assert excinfo.value.code == "answer_exceeds_max_len"


def test_unusable_samples_are_counted():
    report = EncodeReport()
    assert tok_items(Tokenizer(), token_samples(), 8, report) == []
    assert report.total == 4
    assert report.skipped == {"declarative_exceeds_max_len": 4}


def test_fit_tokenizer_uses_the_model_mode():
    config = ModelConfig(tokenizer_mode="whitespace_char_fallback", tokenizer_min_count=2)
    tokenizer = fit_tokenizer(config, sentence_samples(), token_samples())
    assert "the" in tokenizer.words
    assert fit_tokenizer(ModelConfig(), sentence_samples(), token_samples()).words == ()


def _config(**overrides) -> TrainConfig:
    values = {"lr": 0.005, "batch_size": 2, "epochs_per_stage": 2, "weight_decay": 0.0, "seed": 1}
    values.update(overrides)
    return TrainConfig(**values)


def test_stages_are_reproducible_and_worker_independent(model_factory):
    tokenizer = Tokenizer()
    serial = model_factory(max_len=64)
    again = model_factory(max_len=64)
    threaded = model_factory(max_len=64)
    first = sft_stage(serial, tokenizer, sentence_samples(), token_samples(), _config())
    second = sft_stage(again, tokenizer, sentence_samples(), token_samples(), _config())
    third = sft_stage(threaded, tokenizer, sentence_samples(), token_samples(), _config(), ThreadBackend(2))
    assert first.curve == second.curve == third.curve
    assert len(first.curve) == 2
    assert first.steps == 2 * 4
    assert_params_equal(serial, again)
    assert_params_equal(serial, threaded)


def test_stage_errors(model_factory):
    model = model_factory(max_len=64)
    with pytest.raises(ValidationFailure) as excinfo:
        sft_stage(model, Tokenizer(), [], [], _config())
    assert excinfo.value.code == "empty_dataset"
    with pytest.raises(ValidationFailure) as excinfo:
        sen_stage(model, Tokenizer(), [], _config())
    assert excinfo.value.code == "empty_dataset"
    with pytest.raises(ValidationFailure) as excinfo:
        tok_stage(model_factory(max_len=8), Tokenizer(), token_samples(), _config())
    assert excinfo.value.code == "no_trainable_samples"
    with pytest.raises(ValidationFailure) as excinfo:
        run_stage(model, "sft", [], lambda m, item: sft_loss(m, [item]), _config())
    assert excinfo.value.code == "empty_dataset"


def test_single_sample_overfits(model_factory):
    model = model_factory()
    pair = SFTPair(x=(ord("Q"),), y=(ord("o"), ord("k"), EOS_ID))
    config = TrainConfig(lr=0.01, batch_size=1, epochs_per_stage=400, weight_decay=0.0)
    result = run_stage(model, "sft", [pair], lambda m, item: sft_loss(m, [(item.x, item.y)]), config)
    assert result.curve[-1] < result.curve[0]
    assert result.curve[-1] / len(pair.y) < 0.01


def test_pending_stages():
    full = TrainConfig()
    assert pending_stages(full, []) == ["sft", "sen", "tok"]
    assert pending_stages(full, ["sft"]) == ["sen", "tok"]
    assert pending_stages(full, ["sft", "sen", "tok"]) == []
    assert pending_stages(TrainConfig(stages="no_sft"), ["sen"]) == ["tok"]
    with pytest.raises(ValidationFailure) as excinfo:
        pending_stages(full, ["tok"])
    assert excinfo.value.code == "stage_order_violation"
    with pytest.raises(ValidationFailure) as excinfo:
        pending_stages(full, ["warmup"])
    assert excinfo.value.code == "unknown_completed_stage"


def test_pipeline_runs_checkpoints_and_resumes(model_factory, tmp_path):
    checkpoint = Checkpoint(model=model_factory(max_len=64), tokenizer=Tokenizer())
    report = run_pipeline(checkpoint, sentence_samples(), token_samples(), _config(epochs_per_stage=1), tmp_path)
    assert report.stage_order == ["sft", "sen", "tok"]
    assert report.completed_stages == ["sft", "sen", "tok"]
    assert report.final_checkpoint == checkpoint_name("tok")
    assert report.margin is not None and report.margin.samples == 4
    assert [stage.checkpoint for stage in report.stages] == [checkpoint_name(s) for s in ("sft", "sen", "tok")]

    after_sft = load_checkpoint(tmp_path / checkpoint_name("sft"))
    assert after_sft.completed_stages == ["sft"]
    final = load_checkpoint(tmp_path / checkpoint_name("tok"))
    assert final.completed_stages == ["sft", "sen", "tok"]
    assert_params_equal(final.model, checkpoint.model)

    resumed_dir = tmp_path / "resumed"
    resumed = run_pipeline(
        after_sft, sentence_samples(), token_samples(), _config(epochs_per_stage=1), resumed_dir, resumed_from="sft"
    )
    assert resumed.stage_order == ["sen", "tok"]
    assert resumed.resumed_from == "sft"
    assert not (resumed_dir / checkpoint_name("sft")).exists()

    nothing = run_pipeline(final, sentence_samples(), token_samples(), _config(), tmp_path / "noop")
    assert nothing.stage_order == []
    assert nothing.completed_stages == ["sft", "sen", "tok"]


def test_ablation_skips_stages(model_factory, tmp_path):
    checkpoint = Checkpoint(model=model_factory(max_len=64), tokenizer=Tokenizer())
    report = run_pipeline(
        checkpoint, sentence_samples(), token_samples(), _config(epochs_per_stage=1, stages="no_sen"), tmp_path
    )
    assert report.stage_order == ["sft", "tok"]
    assert report.skipped_stages == ["sen"]
    assert report.margin is None
