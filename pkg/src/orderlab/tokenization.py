"""Registered tokenization schemes.

Contrasts are surprisal differences, so any consistent scheme is sound;
the scheme in use is always recorded via its ``scheme_id``.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

from .errors import UsageError

_ASCII_PUNCT = frozenset(string.punctuation)

WHITESPACE = "whitespace"
PUNCT_LOWER = "punct-split+lowercase"

#: Default scheme for the native n-gram backend. External backends receive
#: raw sentences and apply their own tokenizers.
DEFAULT_SCHEME = PUNCT_LOWER


@dataclass(frozen=True)
class TokenSequence:
    """Tokens of one sentence plus the scheme that produced them.

    Boundary symbols are never included; scorers add them.
    """

    tokens: tuple[str, ...]
    scheme_id: str

    def __len__(self) -> int:
        return len(self.tokens)


def _split_whitespace(sentence: str) -> list[str]:
    return sentence.split()


def _split_punct_lower(sentence: str) -> list[str]:
    tokens: list[str] = []
    for chunk in sentence.split():
        lead: list[str] = []
        trail: list[str] = []
        while chunk and chunk[0] in _ASCII_PUNCT:
            lead.append(chunk[0])
            chunk = chunk[1:]
        while chunk and chunk[-1] in _ASCII_PUNCT:
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk.lower())
        tokens.extend(reversed(trail))
    return tokens


_SCHEMES = {
    WHITESPACE: _split_whitespace,
    PUNCT_LOWER: _split_punct_lower,
}


def available_schemes() -> tuple[str, ...]:
    return tuple(sorted(_SCHEMES))


def tokenize(sentence: str, scheme: str = DEFAULT_SCHEME) -> TokenSequence:
    """Tokenize one sentence. Deterministic; empty input yields an empty sequence."""
    try:
        splitter = _SCHEMES[scheme]
    except KeyError:
        raise UsageError(
            f"unknown tokenization scheme {scheme!r}; available: {', '.join(available_schemes())}"
        ) from None
    return TokenSequence(tuple(splitter(sentence)), scheme)


def is_punctuation_token(token: str) -> bool:
    return bool(token) and all(ch in _ASCII_PUNCT for ch in token)
