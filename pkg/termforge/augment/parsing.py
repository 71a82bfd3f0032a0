from __future__ import annotations

import re
from dataclasses import dataclass

from termforge.core.errors import ParseError, SampleRejected

from .records import normalize_ws

QUESTION = "Question"
CORRECT = "Correct Answer"
REPHRASED = "Rephrased Sentence"
CHOICES = ("Choice A", "Choice B", "Choice C", "Choice D")

_KNOWN = (QUESTION, CORRECT, REPHRASED, *CHOICES)
_TAG_LINE = re.compile(
    r"^\s*<\s*(" + "|".join(re.escape(tag) for tag in _KNOWN) + r")\s*>\s*[:：]\s*(.*)$",
    re.IGNORECASE,
)
_CANONICAL = {tag.lower(): tag for tag in _KNOWN}


def split_tagged(raw: str) -> dict[str, str]:
    """Collect ``<Tag>: value`` fields; a value runs over following lines until the next tag or end of input.

    Text before the first tag is ignored. A repeated tag is a :class:`ParseError`.
    """
    fields: dict[str, list[str]] = {}
    current: str | None = None
    for line in raw.splitlines():
        match = _TAG_LINE.match(line)
        if match:
            tag = _CANONICAL[" ".join(match.group(1).split()).lower()]
            if tag in fields:
                raise ParseError("duplicate_tag", tag=f"<{tag}>")
            fields[tag] = [match.group(2)]
            current = tag
        elif current is not None:
            fields[current].append(line)
    return {tag: "\n".join(lines).strip() for tag, lines in fields.items()}


def _require(fields: dict[str, str], tags: tuple[str, ...]) -> None:
    for tag in tags:
        if tag not in fields:
            raise ParseError("missing_tag", tag=f"<{tag}>")
        if not fields[tag]:
            raise ParseError("empty_field", tag=f"<{tag}>")


@dataclass(slots=True, frozen=True)
class TokenOutput:
    question: str
    correct_answer: str
    rephrased: str


@dataclass(slots=True, frozen=True)
class SentenceOutput:
    question: str
    choices: tuple[str, str, str, str]
    correct: str
    correct_index: int

    @property
    def answer_in_position_a(self) -> bool:
        return self.correct_index == 0

    @property
    def negatives(self) -> tuple[str, str, str]:
        others = [choice for i, choice in enumerate(self.choices) if i != self.correct_index]
        return (others[0], others[1], others[2])


def parse_token_output(raw: str) -> TokenOutput:
    """Parse a token-level generation; the rephrased sentence must contain the answer verbatim."""
    fields = split_tagged(raw)
    _require(fields, (QUESTION, CORRECT, REPHRASED))
    output = TokenOutput(question=fields[QUESTION], correct_answer=fields[CORRECT], rephrased=fields[REPHRASED])
    if output.correct_answer not in output.rephrased:
        raise SampleRejected("answer_not_in_rephrased", answer=output.correct_answer)
    return output


def parse_sentence_output(raw: str) -> SentenceOutput:
    """Parse a sentence-level generation.

    The correct answer must equal one choice after whitespace normalization. Choice A is expected to be the
    correct one; callers treat another position as a warning and keep the sample.
    """
    fields = split_tagged(raw)
    _require(fields, (QUESTION, *CHOICES, CORRECT))
    choices = tuple(fields[tag] for tag in CHOICES)
    normalized = [normalize_ws(choice) for choice in choices]
    if len(set(normalized)) != len(normalized):
        raise SampleRejected("duplicate_choices")
    target = normalize_ws(fields[CORRECT])
    if target not in normalized:
        raise SampleRejected("correct_answer_matches_no_choice", correct=fields[CORRECT][:80])
    index = normalized.index(target)
    return SentenceOutput(
        question=fields[QUESTION],
        choices=(choices[0], choices[1], choices[2], choices[3]),
        correct=choices[index],
        correct_index=index,
    )


__all__ = [
    "TokenOutput",
    "SentenceOutput",
    "parse_token_output",
    "parse_sentence_output",
    "split_tagged",
]
