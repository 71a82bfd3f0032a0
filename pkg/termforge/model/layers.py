"""Numpy forward/backward primitives for the pre-LN transformer block."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

Array = NDArray[np.float64]

LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)


def softmax(x: Array, axis: int = -1) -> Array:
    shifted = x - x.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


@dataclass(slots=True)
class LayerNormCache:
    z: Array
    std: Array


def layer_norm(x: Array, g: Array, b: Array) -> tuple[Array, LayerNormCache]:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    std = np.sqrt(var + LN_EPS)
    z = (x - mean) / std
    return z * g + b, LayerNormCache(z=z, std=std)


def layer_norm_backward(dout: Array, cache: LayerNormCache, g: Array) -> tuple[Array, Array, Array]:
    """Return ``(dx, dg, db)``."""
    z, std = cache.z, cache.std
    n = z.shape[-1]
    dg = (dout * z).sum(axis=0)
    db = dout.sum(axis=0)
    dz = dout * g
    dx = (n * dz - dz.sum(axis=-1, keepdims=True) - z * (dz * z).sum(axis=-1, keepdims=True)) / (n * std)
    return dx, dg, db


def gelu(u: Array) -> Array:
    return 0.5 * u * (1.0 + np.tanh(_GELU_C * (u + 0.044715 * u**3)))


def gelu_grad(u: Array) -> Array:
    t = np.tanh(_GELU_C * (u + 0.044715 * u**3))
    return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * 0.044715 * u * u)


@dataclass(slots=True)
class AttentionCache:
    h: Array
    q: Array
    k: Array
    v: Array
    p: Array
    merged: Array


def _split_heads(x: Array, n_heads: int) -> Array:
    t, d = x.shape
    return x.reshape(t, n_heads, d // n_heads).transpose(1, 0, 2)


def _merge_heads(x: Array) -> Array:
    n_heads, t, hd = x.shape
    return x.transpose(1, 0, 2).reshape(t, n_heads * hd)


def attention(
    h: Array, w_q: Array, w_k: Array, w_v: Array, w_o: Array, n_heads: int, causal: bool
) -> tuple[Array, AttentionCache]:
    q = _split_heads(h @ w_q, n_heads)
    k = _split_heads(h @ w_k, n_heads)
    v = _split_heads(h @ w_v, n_heads)
    scores = q @ k.transpose(0, 2, 1) / math.sqrt(q.shape[-1])
    if causal:
        t = h.shape[0]
        mask = np.tril(np.ones((t, t), dtype=bool))
        scores = np.where(mask, scores, -np.inf)
    p = softmax(scores)
    merged = _merge_heads(p @ v)
    return merged @ w_o, AttentionCache(h=h, q=q, k=k, v=v, p=p, merged=merged)


def attention_backward(
    dout: Array, cache: AttentionCache, w_q: Array, w_k: Array, w_v: Array, w_o: Array
) -> tuple[Array, dict[str, Array]]:
    """Return ``(dh, {W_q, W_k, W_v, W_o})``; masked scores carry zero probability and so zero gradient."""
    n_heads = cache.q.shape[0]
    d_wo = cache.merged.T @ dout
    d_o = _split_heads(dout @ w_o.T, n_heads)
    d_p = d_o @ cache.v.transpose(0, 2, 1)
    d_v = cache.p.transpose(0, 2, 1) @ d_o
    d_scores = cache.p * (d_p - (d_p * cache.p).sum(axis=-1, keepdims=True))
    d_scores /= math.sqrt(cache.q.shape[-1])
    d_q = _merge_heads(d_scores @ cache.k)
    d_k = _merge_heads(d_scores.transpose(0, 2, 1) @ cache.q)
    d_v = _merge_heads(d_v)
    h = cache.h
    grads = {"W_q": h.T @ d_q, "W_k": h.T @ d_k, "W_v": h.T @ d_v, "W_o": d_wo}
    dh = d_q @ w_q.T + d_k @ w_k.T + d_v @ w_v.T
    return dh, grads


__all__ = [
    "Array",
    "softmax",
    "layer_norm",
    "layer_norm_backward",
    "gelu",
    "gelu_grad",
    "attention",
    "attention_backward",
    "LayerNormCache",
    "AttentionCache",
]
