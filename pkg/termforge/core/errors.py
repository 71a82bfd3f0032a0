from __future__ import annotations

from typing import Any


class TermforgeError(Exception):
    """Base class for every error raised by termforge.

    Args:
        code: Stable snake_case identifier, suitable for logs and reports.
        detail: Optional human-readable elaboration.
        **context: Extra structured fields (record ids, line numbers, paths).
    """

    exit_code: int = 1

    def __init__(self, code: str, detail: str | None = None, **context: Any) -> None:
        self.code = code
        self.detail = detail
        self.context = context
        message = code if detail is None else f"{code}: {detail}"
        if context:
            rendered = ", ".join(f"{key}={value!r}" for key, value in sorted(context.items()))
            message = f"{message} ({rendered})"
        super().__init__(message)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"code": self.code}
        if self.detail is not None:
            payload["detail"] = self.detail
        payload.update({key: _jsonable(value) for key, value in self.context.items()})
        return payload


class ValidationFailure(TermforgeError):
    exit_code = 1


class CorpusFormatError(ValidationFailure):
    """Malformed corpus or lexicon input."""


class ParseError(ValidationFailure):
    """Generation output that does not follow the tagged output format."""


class SampleRejected(ValidationFailure):
    """A generated or loaded sample violates a QCA invariant."""


class ArtifactIOError(TermforgeError):
    exit_code = 2


class RemoteClientError(TermforgeError):
    exit_code = 3


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


__all__ = [
    "TermforgeError",
    "ValidationFailure",
    "CorpusFormatError",
    "ParseError",
    "SampleRejected",
    "ArtifactIOError",
    "RemoteClientError",
]
