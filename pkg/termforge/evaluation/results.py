from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict

from termforge.core.storage import dumps_json

from .qa import QAResult
from .qca import QCAResult


class EvalResults(BaseModel):
    """Results file body; serialized with sorted keys so reruns diff cleanly."""

    model_config = ConfigDict(extra="forbid")

    config: dict[str, Any]
    mode: str
    qca: QCAResult
    qa: Optional[QAResult] = None

    def to_dict(self) -> dict[str, Any]:
        payload = self.model_dump(mode="json")
        payload["qca"].pop("mode", None)
        return payload


def dumps_results(results: EvalResults) -> str:
    return dumps_json(results.to_dict())


__all__ = ["EvalResults", "dumps_results"]
