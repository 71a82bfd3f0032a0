from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from termforge.core.errors import ValidationFailure

from .config import AttentionMode, ModelConfig
from .layers import (
    Array,
    AttentionCache,
    LayerNormCache,
    attention,
    attention_backward,
    gelu,
    gelu_grad,
    layer_norm,
    layer_norm_backward,
    softmax,
)
from .tokenizer import EOS_ID, SEP_ID


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Named parameter shapes in canonical order."""
    d, v = config.d_model, config.vocab_size
    shapes: dict[str, tuple[int, ...]] = {"tok_emb": (v, d), "pos_emb": (config.max_len, d)}
    for layer in range(config.n_layers):
        prefix = f"layers.{layer}"
        shapes[f"{prefix}.ln1.g"] = (d,)
        shapes[f"{prefix}.ln1.b"] = (d,)
        for name in ("W_q", "W_k", "W_v", "W_o"):
            shapes[f"{prefix}.attn.{name}"] = (d, d)
        shapes[f"{prefix}.ln2.g"] = (d,)
        shapes[f"{prefix}.ln2.b"] = (d,)
        shapes[f"{prefix}.ffn.W1"] = (d, config.d_ff)
        shapes[f"{prefix}.ffn.b1"] = (config.d_ff,)
        shapes[f"{prefix}.ffn.W2"] = (config.d_ff, d)
        shapes[f"{prefix}.ffn.b2"] = (d,)
    shapes["ln_f.g"] = (d,)
    shapes["ln_f.b"] = (d,)
    shapes["head.W"] = (d, v)
    shapes["head.b"] = (v,)
    return shapes


@dataclass(slots=True)
class TinyLM:
    config: ModelConfig
    params: dict[str, Array]
    rng_seed: int = 0

    @classmethod
    def init(cls, config: ModelConfig, seed: int) -> "TinyLM":
        """Normal(0, init_std) weights, zero biases, unit LayerNorm gains, drawn in canonical order."""
        rng = np.random.default_rng(seed)
        params: dict[str, Array] = {}
        for name, shape in parameter_shapes(config).items():
            if name.endswith(".g"):
                params[name] = np.ones(shape, dtype=np.float64)
            elif name.endswith(".b") or name.endswith(".b1") or name.endswith(".b2"):
                params[name] = np.zeros(shape, dtype=np.float64)
            else:
                params[name] = rng.normal(0.0, config.init_std, size=shape)
        return cls(config=config, params=params, rng_seed=seed)

    def zeros_like(self) -> dict[str, Array]:
        return {name: np.zeros_like(value) for name, value in self.params.items()}

    def copy(self) -> "TinyLM":
        return TinyLM(config=self.config, params={k: v.copy() for k, v in self.params.items()}, rng_seed=self.rng_seed)

    @property
    def n_parameters(self) -> int:
        return int(sum(value.size for value in self.params.values()))

    def check_finite(self) -> None:
        for name, value in self.params.items():
            if not np.all(np.isfinite(value)):
                raise ValidationFailure("non_finite_parameter", name=name)


@dataclass(slots=True)
class BlockCache:
    ln1: LayerNormCache
    attn: AttentionCache
    ln2: LayerNormCache
    h2: Array
    u: Array
    a: Array


@dataclass(slots=True)
class ForwardCache:
    """Activations from one forward pass; ``offset`` is the first row whose output is a target distribution."""

    ids: np.ndarray
    mode: AttentionMode
    blocks: list[BlockCache]
    ln_f: LayerNormCache
    hidden: Array
    offset: int = 0
    logits: Optional[Array] = None
    probs: Optional[Array] = field(default=None)


def _run(model: TinyLM, ids: Sequence[int], mode: AttentionMode) -> ForwardCache:
    config = model.config
    p = model.params
    ids_arr = np.asarray(ids, dtype=np.int64)
    t = ids_arr.shape[0]
    if t == 0:
        raise ValidationFailure("empty_sequence")
    if t > config.max_len:
        raise ValidationFailure("sequence_exceeds_max_len", length=t, max_len=config.max_len)
    if ids_arr.min() < 0 or ids_arr.max() >= config.vocab_size:
        raise ValidationFailure("token_id_out_of_range", vocab_size=config.vocab_size)

    x = p["tok_emb"][ids_arr] + p["pos_emb"][:t]
    blocks: list[BlockCache] = []
    causal = mode == "causal"
    for layer in range(config.n_layers):
        pre = f"layers.{layer}"
        h, ln1 = layer_norm(x, p[f"{pre}.ln1.g"], p[f"{pre}.ln1.b"])
        attn_out, attn_cache = attention(
            h,
            p[f"{pre}.attn.W_q"],
            p[f"{pre}.attn.W_k"],
            p[f"{pre}.attn.W_v"],
            p[f"{pre}.attn.W_o"],
            config.n_heads,
            causal,
        )
        x = x + attn_out
        h2, ln2 = layer_norm(x, p[f"{pre}.ln2.g"], p[f"{pre}.ln2.b"])
        u = h2 @ p[f"{pre}.ffn.W1"] + p[f"{pre}.ffn.b1"]
        a = gelu(u)
        x = x + a @ p[f"{pre}.ffn.W2"] + p[f"{pre}.ffn.b2"]
        blocks.append(BlockCache(ln1=ln1, attn=attn_cache, ln2=ln2, h2=h2, u=u, a=a))
    hidden, ln_f = layer_norm(x, p["ln_f.g"], p["ln_f.b"])
    return ForwardCache(ids=ids_arr, mode=mode, blocks=blocks, ln_f=ln_f, hidden=hidden)


def forward(model: TinyLM, condition: Sequence[int], target: Sequence[int]) -> tuple[Array, ForwardCache]:
    """Causal pass over ``condition ++ [sep] ++ target[:-1]``.

    Args:
        model: The language model.
        condition: Condition tokens ``q`` (may be empty).
        target: Target tokens ``t``; must be non-empty.

    Returns:
        ``(probs, cache)`` where ``probs[j]`` is ``p(t_j | q, sep, t_<j)`` with shape ``(len(t), vocab)``.
    """
    if model.config.attention_mode != "causal":
        raise ValidationFailure("forward_requires_causal_mode", attention_mode=model.config.attention_mode)
    if len(target) == 0:
        raise ValidationFailure("empty_target")
    total = len(condition) + len(target)
    if total > model.config.max_len:
        raise ValidationFailure("sequence_exceeds_max_len", length=total, max_len=model.config.max_len)
    ids = [*condition, SEP_ID, *target[:-1]]
    cache = _run(model, ids, "causal")
    offset = len(condition)
    logits = cache.hidden[offset:] @ model.params["head.W"] + model.params["head.b"]
    cache.offset = offset
    cache.logits = logits
    cache.probs = softmax(logits)
    return cache.probs, cache


def embed_with_cache(
    model: TinyLM, tokens: Sequence[int], mode: AttentionMode = "bidirectional"
) -> tuple[Array, ForwardCache]:
    if len(tokens) == 0:
        raise ValidationFailure("empty_sequence")
    cache = _run(model, tokens, mode)
    cache.offset = len(tokens) - 1
    return cache.hidden[-1].copy(), cache


def embed_sequence(model: TinyLM, tokens: Sequence[int], mode: AttentionMode = "bidirectional") -> Array:
    """Final-layer hidden state at the last position, bidirectional unless ``mode`` says otherwise."""
    vector, _ = embed_with_cache(model, tokens, mode)
    return vector


def _backward(
    model: TinyLM, cache: ForwardCache, dlogits: Optional[Array], dhidden: Optional[Array]
) -> tuple[dict[str, Array], Array]:
    config = model.config
    p = model.params
    grads = model.zeros_like()
    t = cache.hidden.shape[0]
    d_hidden = np.zeros_like(cache.hidden)

    if dlogits is not None:
        if cache.logits is None or dlogits.shape != cache.logits.shape:
            raise ValidationFailure(
                "gradient_shape_mismatch",
                expected=None if cache.logits is None else str(cache.logits.shape),
                actual=str(dlogits.shape),
            )
        rows = cache.hidden[cache.offset :]
        grads["head.W"] += rows.T @ dlogits
        grads["head.b"] += dlogits.sum(axis=0)
        d_hidden[cache.offset :] += dlogits @ p["head.W"].T
    if dhidden is not None:
        if dhidden.shape != (config.d_model,):
            raise ValidationFailure("gradient_shape_mismatch", expected=str((config.d_model,)), actual=str(dhidden.shape))
        d_hidden[cache.offset] += dhidden

    dx, dg, db = layer_norm_backward(d_hidden, cache.ln_f, p["ln_f.g"])
    grads["ln_f.g"] += dg
    grads["ln_f.b"] += db

    for layer in reversed(range(config.n_layers)):
        pre = f"layers.{layer}"
        block = cache.blocks[layer]
        grads[f"{pre}.ffn.W2"] += block.a.T @ dx
        grads[f"{pre}.ffn.b2"] += dx.sum(axis=0)
        du = (dx @ p[f"{pre}.ffn.W2"].T) * gelu_grad(block.u)
        grads[f"{pre}.ffn.W1"] += block.h2.T @ du
        grads[f"{pre}.ffn.b1"] += du.sum(axis=0)
        dh2 = du @ p[f"{pre}.ffn.W1"].T
        dln2, dg, db = layer_norm_backward(dh2, block.ln2, p[f"{pre}.ln2.g"])
        grads[f"{pre}.ln2.g"] += dg
        grads[f"{pre}.ln2.b"] += db
        dx = dx + dln2

        dh, attn_grads = attention_backward(
            dx,
            block.attn,
            p[f"{pre}.attn.W_q"],
            p[f"{pre}.attn.W_k"],
            p[f"{pre}.attn.W_v"],
            p[f"{pre}.attn.W_o"],
        )
        for name, value in attn_grads.items():
            grads[f"{pre}.attn.{name}"] += value
        dln1, dg, db = layer_norm_backward(dh, block.ln1, p[f"{pre}.ln1.g"])
        grads[f"{pre}.ln1.g"] += dg
        grads[f"{pre}.ln1.b"] += db
        dx = dx + dln1

    np.add.at(grads["tok_emb"], cache.ids, dx)
    grads["pos_emb"][:t] += dx
    return grads, dx


def backward(
    model: TinyLM, cache: ForwardCache, dlogits: Optional[Array] = None, dhidden: Optional[Array] = None
) -> dict[str, Array]:
    """Exact reverse-mode gradients for every parameter.

    Args:
        model: The model the cache was produced with.
        cache: Cache from :func:`forward` or :func:`embed_with_cache`.
        dlogits: Loss gradient with respect to the target-row logits, shape ``(len(t), vocab)``.
        dhidden: Loss gradient with respect to the embedding vector, shape ``(d_model,)``.

    Returns:
        Gradient map whose shapes mirror ``model.params``.
    """
    grads, _ = _backward(model, cache, dlogits, dhidden)
    return grads


def input_gradient(
    model: TinyLM, cache: ForwardCache, dlogits: Optional[Array] = None, dhidden: Optional[Array] = None
) -> Array:
    """Gradient with respect to the summed token and position input embeddings, shape ``(T, d_model)``."""
    _, dx = _backward(model, cache, dlogits, dhidden)
    return dx


StopReason = Literal["eos", "max_new", "max_len"]


@dataclass(slots=True)
class Generation:
    tokens: list[int]
    stop_reason: StopReason

    @property
    def truncated(self) -> bool:
        return self.stop_reason == "max_len"


def greedy_generate(model: TinyLM, condition: Sequence[int], max_new: int, eos_id: int = EOS_ID) -> Generation:
    """Argmax decoding after ``condition ++ [sep]`` until eos, ``max_new`` tokens or the context limit.

    Ties resolve to the lowest token id. The eos token is not included in the output.
    """
    if model.config.attention_mode != "causal":
        raise ValidationFailure("generation_requires_causal_mode", attention_mode=model.config.attention_mode)
    generated: list[int] = []
    prefix = [*condition, SEP_ID]
    if len(prefix) > model.config.max_len:
        raise ValidationFailure("sequence_exceeds_max_len", length=len(prefix), max_len=model.config.max_len)
    while len(generated) < max_new:
        ids = prefix + generated
        if len(ids) > model.config.max_len:
            return Generation(tokens=generated, stop_reason="max_len")
        cache = _run(model, ids, "causal")
        logits = cache.hidden[-1] @ model.params["head.W"] + model.params["head.b"]
        token = int(np.argmax(logits))
        if token == eos_id:
            return Generation(tokens=generated, stop_reason="eos")
        generated.append(token)
    return Generation(tokens=generated, stop_reason="max_new")


__all__ = [
    "TinyLM",
    "ForwardCache",
    "Generation",
    "parameter_shapes",
    "forward",
    "backward",
    "input_gradient",
    "embed_sequence",
    "embed_with_cache",
    "greedy_generate",
]
