"""Deterministic text normalization shared by indexing and phrase queries."""

from __future__ import annotations

import re
from dataclasses import dataclass

# Bump whenever tokenization rules change; stored in index files so a stale
# index is refused instead of silently answering with different semantics.
TOKENIZER_VERSION = 1

# Maximal runs of letters and digits; everything else separates tokens.
# \w minus underscore covers Unicode letters and digits.
_TOKEN_RE = re.compile(r"[^\W_]+")


class InvalidPhraseError(ValueError):
    """Raised when a phrase contains no indexable tokens."""


def normalize_tokenize(text: str) -> list[tuple[str, int]]:
    """Split ``text`` into (token, position) pairs.

    The text is lowercased first, then tokens are taken as maximal runs of
    letters and digits.  Positions number the tokens 0, 1, 2, ... in order
    of appearance, so phrase queries can test adjacency.
    """
    lowered = text.lower()
    return [(m.group(), i) for i, m in enumerate(_TOKEN_RE.finditer(lowered))]


@dataclass(frozen=True)
class TokenizedPhrase:
    """A normalized, non-empty token sequence used for exact phrase matching."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tokens:
            raise InvalidPhraseError("phrase contains no tokens")
        for tok in self.tokens:
            if not isinstance(tok, str) or _TOKEN_RE.fullmatch(tok) is None or tok != tok.lower():
                raise ValueError(f"token {tok!r} is not in normalized form")

    @classmethod
    def from_text(cls, text: str) -> "TokenizedPhrase":
        tokens = tuple(tok for tok, _ in normalize_tokenize(text))
        if not tokens:
            raise InvalidPhraseError(f"phrase {text!r} contains no indexable tokens")
        return cls(tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __str__(self) -> str:
        return " ".join(self.tokens)
