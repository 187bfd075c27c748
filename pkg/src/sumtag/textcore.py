"""Tokenization, n-gram counting, and longest-common-subsequence primitives.

Everything downstream (metrics, tagging fixtures) consumes the token
sequences produced here, so the rules are deliberately small and fixed:

* word-level: split on Unicode whitespace; every punctuation or symbol
  character (general categories P* and S*) becomes its own token;
* char-level: one token per Unicode scalar value, whitespace skipped.

Char-level is the conventional choice for scoring Chinese text and avoids
any word-segmentation dependency. Text is NFC-normalized by default so
n-gram keys are stable across input sources.
"""

from __future__ import annotations

import enum
import unicodedata
from collections import Counter
from collections.abc import Iterator, Sequence
from dataclasses import dataclass


class TokenKind(enum.Enum):
    WORD = "word"
    CHAR = "char"


class Normalization(enum.Enum):
    NONE = "none"
    NFC = "nfc"


@dataclass(frozen=True)
class TokenizationScheme:
    kind: TokenKind
    lowercase: bool = False
    normalization: Normalization = Normalization.NFC


#: English-style text: whitespace split, punctuation isolated, lowercased.
WORD_SCHEME = TokenizationScheme(TokenKind.WORD, lowercase=True)

#: CJK-style text: one token per character, whitespace skipped.
CHAR_SCHEME = TokenizationScheme(TokenKind.CHAR, lowercase=False)


@dataclass(frozen=True)
class TokenSequence(Sequence[str]):
    """An ordered, immutable list of non-empty tokens plus the scheme that made it."""

    tokens: tuple[str, ...]
    scheme: TokenizationScheme

    def __post_init__(self) -> None:
        for tok in self.tokens:
            if not tok:
                raise ValueError("token sequences must not contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, index):  # noqa: ANN001 - Sequence protocol
        return self.tokens[index]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)


@dataclass(frozen=True)
class NGramCounts:
    """Multiset of the contiguous n-token windows of one sequence."""

    order: int
    counts: Counter

    def total(self) -> int:
        return sum(self.counts.values())


def is_punctuation(ch: str) -> bool:
    """True for Unicode punctuation and symbol characters (categories P* and S*)."""
    return unicodedata.category(ch)[0] in ("P", "S")


def _split_words(text: str) -> list[str]:
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch.isspace():
            if current:
                tokens.append("".join(current))
                current = []
        elif is_punctuation(ch):
            if current:
                tokens.append("".join(current))
                current = []
            tokens.append(ch)
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current))
    return tokens


def tokenize(text: str, scheme: TokenizationScheme) -> TokenSequence:
    """Tokenize ``text`` under ``scheme``; deterministic, empty text gives an empty sequence."""
    if scheme.normalization is Normalization.NFC:
        text = unicodedata.normalize("NFC", text)
    if scheme.lowercase:
        text = text.lower()
    if scheme.kind is TokenKind.WORD:
        tokens = _split_words(text)
    else:
        tokens = [ch for ch in text if not ch.isspace()]
    return TokenSequence(tuple(tokens), scheme)


def ngram_counts(tokens: Sequence[str], n: int) -> NGramCounts:
    """Count every contiguous window of ``n`` tokens; total = max(0, len - n + 1)."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    toks = tuple(tokens)
    grams = Counter(toks[i : i + n] for i in range(len(toks) - n + 1))
    return NGramCounts(order=n, counts=grams)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence, O(len(a) * len(b)) dynamic programming."""
    if len(b) > len(a):
        a, b = b, a
    if not b:
        return 0
    row = [0] * (len(b) + 1)
    for tok_a in a:
        diag = 0
        for j, tok_b in enumerate(b, start=1):
            above = row[j]
            if tok_a == tok_b:
                row[j] = diag + 1
            elif row[j - 1] > above:
                row[j] = row[j - 1]
            diag = above
    return row[-1]


# Unicode blocks that mark text as CJK for scheme auto-detection.
_CJK_RANGES = (
    (0x3040, 0x30FF),  # hiragana, katakana
    (0x3400, 0x4DBF),  # CJK extension A
    (0x4E00, 0x9FFF),  # CJK unified ideographs
    (0xAC00, 0xD7AF),  # hangul syllables
    (0xF900, 0xFAFF),  # CJK compatibility ideographs
    (0x20000, 0x2A6DF),  # CJK extension B
)


def contains_cjk(text: str) -> bool:
    return any(lo <= ord(ch) <= hi for ch in text for lo, hi in _CJK_RANGES)


def scheme_for_text(text: str) -> TokenizationScheme:
    """CHAR_SCHEME if the text contains any CJK character, else WORD_SCHEME."""
    return CHAR_SCHEME if contains_cjk(text) else WORD_SCHEME
