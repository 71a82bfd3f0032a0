from __future__ import annotations

from functools import lru_cache
from importlib import resources

from termforge.core.errors import ValidationFailure
from termforge.corpus.records import EntityMention, SentenceRecord

TOKEN_TEMPLATE = "token.txt"
SENTENCE_TEMPLATE = "sentence.txt"


@lru_cache()
def load_template(name: str) -> str:
    return resources.files("termforge.augment").joinpath("prompts", name).read_text(encoding="utf-8")


def render_token_prompt(anchor: SentenceRecord, term: EntityMention, template: str | None = None) -> str:
    """Fill the token-level template; ``{background}`` gets the anchor text and ``{term}`` the term surface."""
    if term not in anchor.entities:
        raise ValidationFailure("term_not_in_anchor", anchor_id=anchor.id, term=term.surface)
    return (template or load_template(TOKEN_TEMPLATE)).format(background=anchor.text, term=term.surface)


def render_sentence_prompt(anchor: SentenceRecord, negative: SentenceRecord, template: str | None = None) -> str:
    if anchor.id == negative.id:
        raise ValidationFailure("negative_is_anchor", anchor_id=anchor.id)
    return (template or load_template(SENTENCE_TEMPLATE)).format(anchor=anchor.text, negative=negative.text)


__all__ = ["render_token_prompt", "render_sentence_prompt", "load_template"]
