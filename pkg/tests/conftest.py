from __future__ import annotations

import os
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import pytest
import structlog

from termforge.augment.records import SentenceQCA, TokenQCA
from termforge.core.config import get_settings
from termforge.corpus.records import Corpus, EntityMention, SentenceRecord
from termforge.losses.sequence import LossResult
from termforge.model.config import ModelConfig
from termforge.model.tinylm import TinyLM

FIXTURES = Path(__file__).resolve().parent / "fixtures"
SYNTHETIC = Path(__file__).resolve().parents[1] / "data" / "synthetic"


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the slow training trend tests")


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "no_env_isolation: keep TERMFORGE_* variables and the working directory as the caller set them",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def configure_environment(request, monkeypatch, tmp_path):
    if request.node.get_closest_marker("no_env_isolation"):
        get_settings.cache_clear()
        yield
        get_settings.cache_clear()
        return
    for name in list(os.environ):
        if name.startswith("TERMFORGE_"):
            monkeypatch.delenv(name)
    monkeypatch.chdir(tmp_path)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
    structlog.reset_defaults()


def mention(text: str, surface: str, canonical_id: str | None = None, occurrence: int = 0) -> EntityMention:
    start = -1
    for _ in range(occurrence + 1):
        start = text.index(surface, start + 1)
    return EntityMention(surface=surface, start=start, end=start + len(surface), canonical_id=canonical_id)


def record(
    record_id: str,
    text: str,
    category: str = "general",
    terms: Iterable[tuple[str, str | None]] = (),
    split: str = "unassigned",
) -> SentenceRecord:
    entities = tuple(mention(text, surface, canonical_id) for surface, canonical_id in terms)
    return SentenceRecord(id=record_id, text=text, category=category, entities=entities, split=split)


def tiny_config(**overrides) -> ModelConfig:
    values = {"d_model": 16, "n_layers": 2, "n_heads": 2, "d_ff": 32, "max_len": 32, "vocab_size": 260}
    values.update(overrides)
    return ModelConfig(**values)


def finite_difference_check(
    model: TinyLM,
    loss_fn: Callable[[TinyLM, bool], LossResult],
    rng: np.random.Generator,
    coords_per_tensor: int = 7,
    h: float = 1e-5,
) -> list[tuple[str, tuple[int, ...], float, float]]:
    """Compare analytic gradients with central differences at sampled coordinates of every tensor.

    Returns ``(name, index, analytic, numeric)`` for every coordinate that disagrees.
    """
    analytic = loss_fn(model, True).grads
    assert analytic is not None
    failures = []
    for name in sorted(model.params):
        tensor = model.params[name]
        for _ in range(coords_per_tensor):
            index = tuple(int(rng.integers(dim)) for dim in tensor.shape)
            original = tensor[index]
            tensor[index] = original + h
            plus = loss_fn(model, False).loss
            tensor[index] = original - h
            minus = loss_fn(model, False).loss
            tensor[index] = original
            numeric = (plus - minus) / (2 * h)
            exact = float(analytic[name][index])
            if abs(exact - numeric) > 1e-4 * max(abs(exact), abs(numeric)) + 1e-8:
                failures.append((name, index, exact, numeric))
    return failures


@pytest.fixture()
def model_factory() -> Callable[..., TinyLM]:
    def _build(seed: int = 7, **overrides) -> TinyLM:
        return TinyLM.init(tiny_config(**overrides), seed)

    return _build


@pytest.fixture()
def tiny_model(model_factory) -> TinyLM:
    return model_factory()


@pytest.fixture()
def small_corpus() -> Corpus:
    """Six sentences, two categories, one confusable pair (reserve ratio / reserve rate)."""
    records = (
        record("a1", "Banks must hold the reserve ratio above five percent.", "liquidity", [("reserve ratio", "rr")]),
        record("a2", "The reserve rate is the price charged on overnight reserves.", "liquidity", [("reserve rate", "rt")]),
        record("a3", "Supervisors review the reserve ratio every quarter.", "liquidity", [("reserve ratio", "rr")]),
        record("b1", "The audit committee must meet four times a year.", "governance", [("audit committee", "ac")]),
        record("b2", "An audit commission is a temporary body set up by the board.", "governance", [("audit commission", "acm")]),
        record("b3", "Minutes are kept by the company secretary.", "governance"),
    )
    return Corpus(records=records)


def sentence_samples(split: str = "train") -> list[SentenceQCA]:
    rows = [
        ("Who signs the minutes?", "The secretary signs the minutes.", ("The auditor signs the minutes.", "The secretary does not sign.", "The clerk signs the minutes.")),
        ("What must the ratio do?", "The ratio must stay high.", ("The rate must stay high.", "The ratio must not stay high.", "The ratio must fall fast.")),
        ("When does the board meet?", "The board meets every month.", ("The board meets once a year.", "The board does not meet.", "The panel meets every month.")),
        ("What is kept for five years?", "Each record is kept five years.", ("Each report is kept five years.", "Each record is not kept.", "Each record is kept one day.")),
    ]
    return [
        SentenceQCA(question=q, answer=a, negatives=n, anchor_id=f"s{i}", negative_id=f"n{i}", split=split, category="demo")
        for i, (q, a, n) in enumerate(rows)
    ]


def token_samples(split: str = "train") -> list[TokenQCA]:
    rows = [
        ("Which term completes: banks keep the ____ high?", "reserve ratio", ("reserve rate",), "banks keep the reserve ratio high"),
        ("Which term completes: the ____ signs minutes?", "secretary", ("secretariat", "clerk"), "the secretary signs minutes"),
        ("Which term completes: each ____ is filed?", "report", ("record",), "each report is filed"),
        ("Which term completes: the ____ meets?", "audit committee", ("audit commission",), "the audit committee meets"),
    ]
    return [
        TokenQCA(question=q, answer=a, negatives=n, declarative=d, anchor_id=f"t{i}", split=split, category="demo")
        for i, (q, a, n, d) in enumerate(rows)
    ]


def random_tokens(rng: np.random.Generator, length: int, vocab: int = 260) -> list[int]:
    return [int(x) for x in rng.integers(0, vocab, size=length)]


def assert_params_equal(left: TinyLM, right: TinyLM) -> None:
    assert set(left.params) == set(right.params)
    for name in left.params:
        assert np.array_equal(left.params[name], right.params[name]), name
