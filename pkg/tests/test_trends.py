"""Scaled-down ablation trends on the bundled synthetic corpus. Run with ``pytest --runslow``."""

from __future__ import annotations

from pathlib import Path

import pytest

from termforge.core.config import load_settings
from termforge.core.storage import RunStore
from termforge.evaluation.results import EvalResults
from termforge.services.pipeline_service import PipelineService
from termforge.training.pipeline import TrainReport
from tests.conftest import SYNTHETIC

pytestmark = pytest.mark.slow

SEEDS = range(10)


def _run(run_dir: Path, seed: int, stages: str, split: str) -> tuple[TrainReport, EvalResults]:
    settings = load_settings(SYNTHETIC / "config.toml", {"seed": seed, "run_dir": run_dir, "train.stages": stages})
    with RunStore(settings.run_dir) as store:
        service = PipelineService(settings, store)
        service.ingest(SYNTHETIC / "corpus.jsonl", SYNTHETIC / "lexicon.jsonl")
        service.graph()
        service.augment()
        report = service.train()
        return report, service.evaluate(split=split)


def test_sentence_stage_widens_the_margin_and_fits_training_data(tmp_path):
    report, results = _run(tmp_path / "full", 0, "full", "train")
    assert report.margin is not None
    assert report.margin.after > report.margin.before
    assert results.qca.aggregates.accuracy >= 0.90


def test_contrastive_stages_beat_sft_only(tmp_path):
    wins = 0
    for seed in SEEDS:
        _, full = _run(tmp_path / f"full_{seed}", seed, "full", "test")
        _, sft_only = _run(tmp_path / f"no_cl_{seed}", seed, "no_cl", "test")
        wins += full.qca.aggregates.accuracy > sft_only.qca.aggregates.accuracy
    assert wins >= 7
