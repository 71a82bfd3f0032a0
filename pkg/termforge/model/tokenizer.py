from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from termforge.core.errors import ValidationFailure

from .config import TokenizerMode

PAD_ID = 256
BOS_ID = 257
EOS_ID = 258
SEP_ID = 259
N_BYTES = 256
N_SPECIALS = 4
BYTE_VOCAB_SIZE = N_BYTES + N_SPECIALS

_PIECES = re.compile(r"\S+|\s+")


@dataclass(slots=True)
class Tokenizer:
    """Byte tokenizer with an optional learned word layer.

    Ids 0-255 are raw bytes, 256-259 are ``pad``, ``bos``, ``eos`` and ``sep``; in
    ``whitespace_char_fallback`` mode learned whole-word pieces follow from 260. A piece that is not in the
    learned vocabulary falls back to its UTF-8 bytes, so decoding is lossless in both modes.
    """

    mode: TokenizerMode = "byte"
    words: tuple[str, ...] = ()
    _index: dict[str, int] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.mode == "byte" and self.words:
            raise ValidationFailure("byte_tokenizer_has_no_words")
        self._index = {word: BYTE_VOCAB_SIZE + i for i, word in enumerate(self.words)}

    pad_id = PAD_ID
    bos_id = BOS_ID
    eos_id = EOS_ID
    sep_id = SEP_ID

    @property
    def vocab_size(self) -> int:
        return BYTE_VOCAB_SIZE + len(self.words)

    @classmethod
    def fit(cls, texts: Iterable[str], mode: TokenizerMode = "byte", min_count: int = 2) -> "Tokenizer":
        if mode == "byte":
            return cls(mode="byte")
        counts: Counter[str] = Counter()
        for text in texts:
            counts.update(piece for piece in text.split() if len(piece.encode("utf-8")) > 1)
        kept = sorted((word for word, count in counts.items() if count >= min_count), key=lambda w: (-counts[w], w))
        return cls(mode=mode, words=tuple(kept))

    def encode(self, text: str) -> list[int]:
        if self.mode == "byte":
            return list(text.encode("utf-8"))
        ids: list[int] = []
        for piece in _PIECES.findall(text):
            word_id = self._index.get(piece)
            if word_id is None:
                ids.extend(piece.encode("utf-8"))
            else:
                ids.append(word_id)
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        buffer = bytearray()
        for token in ids:
            token = int(token)
            if token < N_BYTES:
                buffer.append(token)
            elif token >= BYTE_VOCAB_SIZE:
                buffer.extend(self.words[token - BYTE_VOCAB_SIZE].encode("utf-8"))
        return buffer.decode("utf-8", errors="replace")

    def to_dict(self) -> dict[str, Any]:
        return {"mode": self.mode, "words": list(self.words)}

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "Tokenizer":
        return cls(mode=payload["mode"], words=tuple(payload.get("words", ())))


__all__ = ["Tokenizer", "PAD_ID", "BOS_ID", "EOS_ID", "SEP_ID", "BYTE_VOCAB_SIZE"]
