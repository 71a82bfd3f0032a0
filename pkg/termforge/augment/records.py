from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from termforge import DATASET_SCHEMA_VERSION
from termforge.core.errors import CorpusFormatError, SampleRejected
from termforge.core.manifest import derive_seed
from termforge.core.storage import dumps_jsonl, iter_jsonl, write_text

SampleSplit = Literal["train", "test"]


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


class SentenceQCA(BaseModel):
    """Question with the anchor-derived answer and three wrong statements (s_j-derived, then two hard negatives)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["sen"] = "sen"
    question: str = Field(min_length=1)
    answer: str = Field(min_length=1)
    negatives: tuple[str, str, str]
    anchor_id: str = Field(min_length=1)
    negative_id: str = Field(min_length=1, description="Sentence the first negative was derived from.")
    split: SampleSplit
    category: Optional[str] = None

    @model_validator(mode="after")
    def _answer_differs(self) -> "SentenceQCA":
        answer = normalize_ws(self.answer)
        for negative in self.negatives:
            if not negative.strip():
                raise ValueError("empty_negative")
            if normalize_ws(negative) == answer:
                raise ValueError("negative_equals_answer")
        return self

    @property
    def options(self) -> list[str]:
        return [self.answer, *self.negatives]

    @property
    def source_ids(self) -> tuple[str, ...]:
        return (self.anchor_id, self.negative_id)


class TokenQCA(BaseModel):
    """Question whose answer is a term, with confusable term negatives and a declarative containing the answer."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["tok"] = "tok"
    question: str = Field(min_length=1)
    answer: str = Field(min_length=1)
    negatives: tuple[str, ...] = Field(min_length=1)
    declarative: str = Field(min_length=1)
    anchor_id: str = Field(min_length=1)
    split: SampleSplit
    category: Optional[str] = None

    @model_validator(mode="after")
    def _invariants(self) -> "TokenQCA":
        if self.answer not in self.declarative:
            raise ValueError("answer_not_in_declarative")
        if len(set(self.negatives)) != len(self.negatives):
            raise ValueError("duplicate_negatives")
        if self.answer in self.negatives:
            raise ValueError("negative_equals_answer")
        if any(not negative for negative in self.negatives):
            raise ValueError("empty_negative")
        return self

    @property
    def options(self) -> list[str]:
        return [self.answer, *self.negatives]

    @property
    def source_ids(self) -> tuple[str, ...]:
        return (self.anchor_id,)


QCASample = Union[SentenceQCA, TokenQCA]


def option_order(sample: QCASample, seed: int) -> list[int]:
    """Shown order of ``sample.options``, ranked by a seeded hash of the sample text so sample order is irrelevant."""
    key = "\x1f".join([sample.question, *sample.options])
    ranks = [derive_seed(seed, f"options:{key}:{i}") for i in range(len(sample.options))]
    return sorted(range(len(ranks)), key=lambda i: (ranks[i], i))


def _rejection_code(exc: ValidationError) -> str:
    for error in exc.errors():
        message = str(error.get("msg", ""))
        if message.startswith("Value error, "):
            return message.removeprefix("Value error, ")
    return "invalid_sample"


def make_sentence_qca(**fields: Any) -> SentenceQCA:
    """Construct a SentenceQCA, turning invariant violations into :class:`SampleRejected`."""
    try:
        return SentenceQCA(**fields)
    except ValidationError as exc:
        raise SampleRejected(_rejection_code(exc), anchor_id=fields.get("anchor_id")) from exc


def make_token_qca(**fields: Any) -> TokenQCA:
    try:
        return TokenQCA(**fields)
    except ValidationError as exc:
        raise SampleRejected(_rejection_code(exc), anchor_id=fields.get("anchor_id")) from exc


@dataclass(slots=True)
class Rejection:
    code: str
    anchor_id: Optional[str]
    kind: Literal["sen", "tok"]
    detail: Optional[str] = None

    def to_dict(self) -> dict[str, Any]:
        return {"anchor_id": self.anchor_id, "code": self.code, "detail": self.detail, "kind": self.kind}


@dataclass(slots=True)
class RejectionReport:
    rejections: list[Rejection] = field(default_factory=list)
    warnings: list[Rejection] = field(default_factory=list)

    def add(self, rejection: Rejection) -> None:
        self.rejections.append(rejection)

    def __len__(self) -> int:
        return len(self.rejections)

    def by_code(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for rejection in self.rejections:
            counts[rejection.code] = counts.get(rejection.code, 0) + 1
        return dict(sorted(counts.items()))

    def to_dict(self) -> dict[str, Any]:
        return {
            "by_code": self.by_code(),
            "rejections": [r.to_dict() for r in self.rejections],
            "total": len(self.rejections),
            "warnings": [w.to_dict() for w in self.warnings],
        }


def sample_to_dict(sample: QCASample) -> dict[str, Any]:
    return {**sample.model_dump(mode="json"), "schema_version": DATASET_SCHEMA_VERSION}


def save_dataset(samples: list[QCASample], path: Path) -> Path:
    """JSON-lines with sorted keys; each row carries its ``kind`` and the dataset ``schema_version``."""
    return write_text(path, dumps_jsonl(sample_to_dict(sample) for sample in samples))


def load_dataset(path: Path) -> list[QCASample]:
    samples: list[QCASample] = []
    for line, payload in iter_jsonl(path):
        kind = payload.get("kind") if isinstance(payload, dict) else None
        model = {"sen": SentenceQCA, "tok": TokenQCA}.get(kind)
        if model is None:
            raise CorpusFormatError("unknown_sample_kind", path=str(path), line=line, kind=kind)
        version = payload.pop("schema_version", None)
        if version != DATASET_SCHEMA_VERSION:
            raise CorpusFormatError(
                "dataset_schema_version_unsupported",
                path=str(path),
                line=line,
                version=version,
                expected=DATASET_SCHEMA_VERSION,
            )
        try:
            samples.append(model.model_validate(payload))
        except ValidationError as exc:
            raise CorpusFormatError("invalid_sample", json.dumps(exc.errors()[0], default=str), line=line) from exc
    return samples


__all__ = [
    "SentenceQCA",
    "TokenQCA",
    "QCASample",
    "Rejection",
    "RejectionReport",
    "make_sentence_qca",
    "make_token_qca",
    "normalize_ws",
    "option_order",
    "save_dataset",
    "load_dataset",
    "sample_to_dict",
]
