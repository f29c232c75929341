"""Shared text primitives: case folding, word boundaries, normalization keys.

All offsets in this toolkit are Unicode scalar indices (Python string
indices), never bytes. Case folding is deliberately the *simple* per-character
fold so that a folded string always has the same length as the original and
offsets computed on one apply to the other.
"""

from __future__ import annotations

import unicodedata

_WS_CHARS = None  # str.split() handles all Unicode whitespace


def simple_fold_char(c: str) -> str:
    """Lowercase one character only if the mapping is 1:1, else keep it.

    Full case folding (str.casefold) may expand characters ("ß" -> "ss",
    "İ" -> "i̇") which would break offset preservation. Characters whose
    lowercase form is longer than one code point are left untouched; they
    then match only themselves, which is the documented approximation.
    """
    low = c.lower()
    return low if len(low) == 1 else c


def simple_fold(text: str) -> str:
    """Length-preserving case fold of a whole string."""
    return "".join(simple_fold_char(c) for c in text)


def _is_base_word_char(c: str) -> bool:
    return c.isalpha() or c.isdigit()


def is_word_char(text: str, i: int) -> bool:
    """True if text[i] counts as part of a word.

    Word characters are alphabetic or digit code points, plus ' and -
    when both neighbours are alphabetic/digit (so "soy-milk's" is one
    word but a dangling hyphen is not).
    """
    c = text[i]
    if _is_base_word_char(c):
        return True
    if c in "'-":
        return (
            0 < i < len(text) - 1
            and _is_base_word_char(text[i - 1])
            and _is_base_word_char(text[i + 1])
        )
    return False


def is_boundary(text: str, pos: int) -> bool:
    """True if pos (0..len) sits on a word boundary.

    Boundaries are the text edges and every transition between a word
    character and a non-word character.
    """
    if pos <= 0 or pos >= len(text):
        return True
    return is_word_char(text, pos - 1) != is_word_char(text, pos)


def collapse_whitespace(text: str) -> str:
    """Collapse runs of whitespace to single spaces and trim the ends."""
    return " ".join(text.split())


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def normalize_key(surface: str) -> str:
    """Equality key for dictionary entries: NFC, simple fold, collapsed whitespace.

    Deterministic and idempotent; all-whitespace input yields "".
    """
    return collapse_whitespace(simple_fold(nfc(surface)))
