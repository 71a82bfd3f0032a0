from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from termforge.core.errors import SampleRejected, ValidationFailure


def find_subsequence(tokens: Sequence[int], part: Sequence[int]) -> int:
    """Index of the first contiguous occurrence of ``part`` in ``tokens``, or -1."""
    n, m = len(tokens), len(part)
    if m == 0:
        return -1
    first = part[0]
    for start in range(n - m + 1):
        if tokens[start] == first and list(tokens[start : start + m]) == list(part):
            return start
    return -1


@dataclass(slots=True, frozen=True)
class MixedSequence:
    """``t`` with its first ``z_plus`` occurrence replaced by ``z_minus``; ``mask`` is 0 exactly on ``pos_span``."""

    tokens: tuple[int, ...]
    mask: tuple[int, ...]
    pos_span: tuple[int, int]
    t: tuple[int, ...]
    z_plus: tuple[int, ...]
    z_minus: tuple[int, ...]

    def reconstruct(self) -> list[int]:
        start, end = self.pos_span
        return [*self.tokens[:start], *self.z_plus, *self.tokens[end:]]


def mix(t: Sequence[int], z_plus: Sequence[int], z_minus: Sequence[int]) -> MixedSequence:
    """Replace the first occurrence of ``z_plus`` in ``t`` by ``z_minus``.

    Raises:
        ValidationFailure: ``z_plus`` or ``z_minus`` is empty.
        SampleRejected: ``z_plus`` does not occur in ``t``.
    """
    if not z_plus:
        raise ValidationFailure("empty_positive_span")
    if not z_minus:
        raise ValidationFailure("empty_negative_span")
    start = find_subsequence(t, z_plus)
    if start < 0:
        raise SampleRejected("answer_not_subsequence")
    prefix = tuple(t[:start])
    suffix = tuple(t[start + len(z_plus) :])
    tokens = prefix + tuple(z_minus) + suffix
    mask = (1,) * len(prefix) + (0,) * len(z_minus) + (1,) * len(suffix)
    return MixedSequence(
        tokens=tokens,
        mask=mask,
        pos_span=(start, start + len(z_minus)),
        t=tuple(t),
        z_plus=tuple(z_plus),
        z_minus=tuple(z_minus),
    )


__all__ = ["MixedSequence", "mix", "find_subsequence"]
