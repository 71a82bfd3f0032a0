from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from termforge.core.errors import ArtifactIOError, ValidationFailure
from termforge.core.storage import read_text, write_text

from .config import ModelConfig
from .tinylm import TinyLM, parameter_shapes
from .tokenizer import Tokenizer

CHECKPOINT_FORMAT = "termforge.tinylm"
CHECKPOINT_VERSION = 1
_DTYPE = np.dtype("<f8")


@dataclass(slots=True)
class Checkpoint:
    model: TinyLM
    tokenizer: Tokenizer
    completed_stages: list[str] = field(default_factory=list)


def _encode_tensor(value: np.ndarray) -> dict[str, Any]:
    data = np.ascontiguousarray(value, dtype=_DTYPE).tobytes(order="C")
    return {"shape": list(value.shape), "data": base64.b64encode(data).decode("ascii")}


def _decode_tensor(name: str, payload: dict[str, Any]) -> np.ndarray:
    shape = tuple(int(dim) for dim in payload["shape"])
    raw = base64.b64decode(payload["data"])
    expected = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
    if len(raw) != expected:
        raise ValidationFailure("tensor_size_mismatch", name=name, expected=expected, actual=len(raw))
    return np.frombuffer(raw, dtype=_DTYPE).reshape(shape).astype(np.float64)


def dumps_checkpoint(checkpoint: Checkpoint) -> str:
    model = checkpoint.model
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": model.config.model_dump(mode="json"),
        "rng_seed": model.rng_seed,
        "tokenizer": checkpoint.tokenizer.to_dict(),
        "completed_stages": list(checkpoint.completed_stages),
        "tensors": {name: _encode_tensor(value) for name, value in model.params.items()},
    }
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> Path:
    """Write a checkpoint; tensors are row-major little-endian float64, base64 encoded."""
    return write_text(path, dumps_checkpoint(checkpoint))


def load_checkpoint(path: Path) -> Checkpoint:
    try:
        payload = json.loads(read_text(path))
    except json.JSONDecodeError as exc:
        raise ArtifactIOError("checkpoint_unparseable", exc.msg, path=str(path)) from exc
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValidationFailure("checkpoint_format_unknown", path=str(path), format=payload.get("format"))
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValidationFailure("checkpoint_version_unsupported", path=str(path), version=payload.get("version"))
    try:
        config = ModelConfig.model_validate(payload["config"])
    except ValidationError as exc:
        raise ValidationFailure("checkpoint_config_invalid", str(exc), path=str(path)) from exc

    tensors = payload["tensors"]
    shapes = parameter_shapes(config)
    if set(tensors) != set(shapes):
        raise ValidationFailure("checkpoint_tensor_names_mismatch", path=str(path))
    params = {}
    for name, shape in shapes.items():
        value = _decode_tensor(name, tensors[name])
        if value.shape != shape:
            raise ValidationFailure("checkpoint_tensor_shape_mismatch", name=name, expected=str(shape))
        params[name] = value
    model = TinyLM(config=config, params=params, rng_seed=int(payload.get("rng_seed", 0)))
    model.check_finite()
    tokenizer = Tokenizer.from_dict(payload["tokenizer"])
    if tokenizer.vocab_size != config.vocab_size:
        raise ValidationFailure("tokenizer_vocab_mismatch", tokenizer=tokenizer.vocab_size, model=config.vocab_size)
    return Checkpoint(model=model, tokenizer=tokenizer, completed_stages=list(payload.get("completed_stages", [])))


__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "dumps_checkpoint", "CHECKPOINT_FORMAT"]
