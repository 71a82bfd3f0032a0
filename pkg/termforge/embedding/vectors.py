from __future__ import annotations

import math
from typing import Iterable, Optional

import numpy as np
from numpy.typing import NDArray

from termforge.core.errors import ValidationFailure

Vector = NDArray[np.float64]


def as_vector(values: Iterable[float] | NDArray, dim: Optional[int] = None) -> Vector:
    """Coerce to a 1-D float64 array, checking length and finiteness."""
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1 or vector.size == 0:
        raise ValidationFailure("vector_not_one_dimensional", shape=str(vector.shape))
    if dim is not None and vector.size != dim:
        raise ValidationFailure("vector_dim_mismatch", expected=dim, actual=int(vector.size))
    if not np.all(np.isfinite(vector)):
        raise ValidationFailure("vector_not_finite")
    return vector


def cosine(u: Vector, v: Vector) -> float:
    """Cosine similarity clamped to [-1, 1].

    Computed as ``dot(u, v) / sqrt(dot(u, u) * dot(v, v))`` so ``cosine(v, v)`` is exactly 1.0 and the result is
    bitwise symmetric in its arguments.
    """
    if u.shape != v.shape:
        raise ValidationFailure("vector_dim_mismatch", expected=int(u.size), actual=int(v.size))
    uu = float(np.dot(u, u))
    vv = float(np.dot(v, v))
    if uu == 0.0 or vv == 0.0:
        raise ValidationFailure("zero_norm_vector")
    value = float(np.dot(u, v)) / math.sqrt(uu * vv)
    return min(1.0, max(-1.0, value))


def l2_normalize(vector: Vector) -> Vector:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        raise ValidationFailure("zero_norm_vector")
    return vector / norm


__all__ = ["Vector", "as_vector", "cosine", "l2_normalize"]
