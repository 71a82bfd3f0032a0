from __future__ import annotations

import math

import numpy as np
import pytest

from termforge.core.config import load_settings
from termforge.core.errors import ValidationFailure
from termforge.corpus.loader import load_lexicon
from termforge.embedding.factory import get_provider
from termforge.embedding.hashing import char_ngrams, embed_hashing
from termforge.embedding.provider import (
    EmbeddingProvider,
    HashingProvider,
    MemoizedProvider,
    ModelProvider,
    embed_with_model,
)
from termforge.embedding.vectors import as_vector, cosine, l2_normalize
from termforge.model.tinylm import embed_sequence
from termforge.model.tokenizer import Tokenizer
from tests.conftest import SYNTHETIC


@pytest.mark.parametrize(
    "u, v, expected",
    [
        ([1.0, 0.0], [1.0, 1.0], 0.7071067811865475),
        ([1.0, 0.0], [0.0, 3.0], 0.0),
        ([1.0, 2.0], [-2.0, -4.0], -1.0),
        ([3.0, 4.0], [4.0, 3.0], 0.96),
    ],
)
def test_cosine_goldens(u, v, expected):
    assert cosine(np.array(u), np.array(v)) == pytest.approx(expected, abs=1e-15)


def test_cosine_is_symmetric_and_exact_on_self():
    rng = np.random.default_rng(0)
    for _ in range(100):
        u = rng.normal(size=17)
        v = rng.normal(size=17)
        assert cosine(u, v) == cosine(v, u)
        assert cosine(u, u) == 1.0
        assert -1.0 <= cosine(u, v) <= 1.0


def test_cosine_errors():
    with pytest.raises(ValidationFailure) as excinfo:
        cosine(np.ones(3), np.ones(4))
    assert excinfo.value.code == "vector_dim_mismatch"
    with pytest.raises(ValidationFailure) as excinfo:
        cosine(np.zeros(3), np.ones(3))
    assert excinfo.value.code == "zero_norm_vector"
    with pytest.raises(ValidationFailure):
        l2_normalize(np.zeros(2))
    with pytest.raises(ValidationFailure):
        as_vector([1.0, math.nan])
    with pytest.raises(ValidationFailure):
        as_vector([1.0, 2.0], dim=3)


def test_char_ngrams():
    assert char_ngrams("abc") == ["ab", "bc", "abc"]
    assert char_ngrams("a") == ["a"]
    assert len(char_ngrams("abcdef")) == 5 + 4 + 3


def test_hashing_embedding_is_deterministic_unit_norm():
    vector = embed_hashing("liquidity coverage ratio", dim=64, seed=3)
    assert vector.shape == (64,)
    assert abs(float(np.linalg.norm(vector)) - 1.0) < 1e-12
    assert np.array_equal(vector, embed_hashing("liquidity coverage ratio", dim=64, seed=3))
    assert not np.array_equal(vector, embed_hashing("liquidity coverage ratio", dim=64, seed=4))
    with pytest.raises(ValidationFailure) as excinfo:
        embed_hashing("", dim=64)
    assert excinfo.value.code == "empty_text"


def test_hashing_falls_back_to_unsigned_counts_when_signs_cancel(monkeypatch):
    signs = iter([1, -1] * 3)
    monkeypatch.setattr("termforge.embedding.hashing.bucket_and_sign", lambda gram, dim, seed: (2, next(signs)))
    vector = embed_hashing("abcd", dim=8)
    expected = np.zeros(8)
    expected[2] = 1.0
    assert np.array_equal(vector, expected)


def test_hashing_separates_confusable_from_unrelated_terms():
    provider = HashingProvider(dim=1024, seed=0)
    surfaces = list(load_lexicon(SYNTHETIC / "lexicon.jsonl").entries)
    pairs = [(surfaces[i], surfaces[i + 1]) for i in range(0, len(surfaces), 2)]
    for left, right in pairs:
        assert cosine(provider.embed(left), provider.embed(right)) > 0.6, (left, right)
    close = cosine(provider.embed("net stable funding ratio"), provider.embed("net stable funding rate"))
    far = cosine(provider.embed("net stable funding ratio"), provider.embed("customer identity"))
    assert close > far


class _CountingProvider(EmbeddingProvider):
    kind = "hashing"

    def __init__(self):
        self.calls = 0

    @property
    def dim(self) -> int:
        return 8

    def embed(self, text: str):
        self.calls += 1
        return embed_hashing(text, 8)


def test_memoized_provider_embeds_each_text_once():
    inner = _CountingProvider()
    provider = MemoizedProvider(inner)
    first = provider.embed("board secretary")
    second = provider.embed("board secretary")
    provider.embed("board secretariat")
    assert inner.calls == 2
    assert len(provider) == 2
    assert first is second
    assert provider.dim == 8
    with pytest.raises(ValueError):
        first[0] = 1.0


def test_model_embedding_limits_and_truncation(tiny_model):
    tokenizer = Tokenizer()
    with pytest.raises(ValidationFailure) as excinfo:
        embed_with_model(tiny_model, list(range(40)))
    assert excinfo.value.code == "sequence_exceeds_max_len"

    provider = ModelProvider(tiny_model, tokenizer)
    text = "a sentence that is clearly longer than thirty two bytes"
    tail = tokenizer.encode(text)[-tiny_model.config.max_len :]
    assert provider.dim == 16
    assert np.array_equal(provider.embed(text), embed_sequence(tiny_model, tail))
    with pytest.raises(ValidationFailure):
        provider.embed("")


def test_factory_selects_provider_kind(tiny_model):
    hashing = get_provider(load_settings(overrides={"graph.hashing_dim": 32}))
    assert isinstance(hashing, MemoizedProvider)
    assert isinstance(hashing.inner, HashingProvider)
    assert hashing.dim == 32

    model = get_provider(load_settings(overrides={"graph.provider": "model"}), tiny_model, Tokenizer())
    assert model.kind == "model"
    assert model.embed("term").shape == (16,)

    with pytest.raises(ValidationFailure) as excinfo:
        get_provider(load_settings(overrides={"graph.provider": "model"}))
    assert excinfo.value.code == "model_provider_needs_checkpoint"
    with pytest.raises(ValidationFailure) as excinfo:
        get_provider(load_settings(overrides={"graph.provider": "remote"}))
    assert excinfo.value.code == "remote_provider_needs_endpoint"
