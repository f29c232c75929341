"""Corpus ingestion: cleaning, sentence splitting, intro selection, caps.

Documents arrive as pre-fetched dumps (JSONL, one document per line) from
Wikipedia, Reddit or Stack Exchange. Wikipedia documents are reduced to
their introduction section, everything is cleaned of markup/URLs/emoji,
split into sentences with a rule-based splitter, and capped: at most
``per_page_max`` sentences per Wikipedia page and at most
``per_type_per_source_max`` sentences per (entity type hint, source) pair.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

from .errors import FileNotReadable, NoIntroSection
from .textutil import collapse_whitespace, nfc


class SourceKind(str, Enum):
    WIKIPEDIA = "wikipedia"
    REDDIT = "reddit"
    STACKEXCHANGE = "stackexchange"
    OTHER = "other"


@dataclass(frozen=True, slots=True)
class Section:
    heading: str | None
    body: str


@dataclass(frozen=True, slots=True)
class RawDocument:
    doc_id: str
    source: SourceKind
    sections: tuple[Section, ...]
    entity_type_hint: str | None = None
    page_id: int | None = None

    def __post_init__(self) -> None:
        if not self.sections:
            raise ValueError(f"document {self.doc_id!r} has no sections")


@dataclass(frozen=True, slots=True)
class Sentence:
    sent_id: str
    text: str
    source: SourceKind
    doc_id: str
    entity_type_hint: str | None = None

    def to_dict(self) -> dict:
        return {
            "sent_id": self.sent_id,
            "text": self.text,
            "source": self.source.value,
            "entity_type_hint": self.entity_type_hint,
            "doc_id": self.doc_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Sentence":
        return cls(
            sent_id=data["sent_id"],
            text=data["text"],
            source=SourceKind(data["source"]),
            doc_id=data["doc_id"],
            entity_type_hint=data.get("entity_type_hint"),
        )


# --------------------------------------------------------------------------
# cleaning

_TAG_RE = re.compile(r"<[^<>]*>")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)

# Pictographic code points (Extended_Pictographic ranges plus the skin-tone
# modifiers); zero-width joiners, variation selectors and the combining
# keycap are stripped with them.
_PICTO_RANGES: tuple[tuple[int, int], ...] = (
    (0x00A9, 0x00A9), (0x00AE, 0x00AE), (0x203C, 0x203C), (0x2049, 0x2049),
    (0x2122, 0x2122), (0x2139, 0x2139), (0x2194, 0x2199), (0x21A9, 0x21AA),
    (0x231A, 0x231B), (0x2328, 0x2328), (0x2388, 0x2388), (0x23CF, 0x23CF),
    (0x23E9, 0x23F3), (0x23F8, 0x23FA), (0x24C2, 0x24C2), (0x25AA, 0x25AB),
    (0x25B6, 0x25B6), (0x25C0, 0x25C0), (0x25FB, 0x25FE), (0x2600, 0x2605),
    (0x2607, 0x2612), (0x2614, 0x2685), (0x2690, 0x2705), (0x2708, 0x2712),
    (0x2714, 0x2714), (0x2716, 0x2716), (0x271D, 0x271D), (0x2721, 0x2721),
    (0x2728, 0x2728), (0x2733, 0x2734), (0x2744, 0x2744), (0x2747, 0x2747),
    (0x274C, 0x274C), (0x274E, 0x274E), (0x2753, 0x2755), (0x2757, 0x2757),
    (0x2763, 0x2767), (0x2795, 0x2797), (0x27A1, 0x27A1), (0x27B0, 0x27B0),
    (0x27BF, 0x27BF), (0x2934, 0x2935), (0x2B05, 0x2B07), (0x2B1B, 0x2B1C),
    (0x2B50, 0x2B50), (0x2B55, 0x2B55), (0x3030, 0x3030), (0x303D, 0x303D),
    (0x3297, 0x3297), (0x3299, 0x3299),
    (0x1F000, 0x1F0FF), (0x1F10D, 0x1F10F), (0x1F12F, 0x1F12F),
    (0x1F16C, 0x1F171), (0x1F17E, 0x1F17F), (0x1F18E, 0x1F18E),
    (0x1F191, 0x1F19A), (0x1F1AD, 0x1F1E5), (0x1F201, 0x1F20F),
    (0x1F21A, 0x1F21A), (0x1F22F, 0x1F22F), (0x1F232, 0x1F23A),
    (0x1F23C, 0x1F23F), (0x1F249, 0x1F3FA), (0x1F3FB, 0x1F3FF),
    (0x1F400, 0x1F53D), (0x1F546, 0x1F64F), (0x1F680, 0x1F6FF),
    (0x1F774, 0x1F77F), (0x1F7D5, 0x1F7FF), (0x1F80C, 0x1F80F),
    (0x1F848, 0x1F84F), (0x1F85A, 0x1F85F), (0x1F888, 0x1F88F),
    (0x1F8AE, 0x1F8FF), (0x1F90C, 0x1F93A), (0x1F93C, 0x1F945),
    (0x1F947, 0x1FAFF), (0x1FC00, 0x1FFFD),
)

_JOINERS = {0x200D, 0xFE0E, 0xFE0F, 0x20E3}

_REPEATED_PUNCT_RE = re.compile(r"([!?.,;:])\1+")
_DECORATION_RE = re.compile(r"[*~^]")


def _is_picto(ch: str) -> bool:
    cp = ord(ch)
    for lo, hi in _PICTO_RANGES:
        if lo <= cp <= hi:
            return True
        if cp < lo:
            return False
    return False


def _strip_emoji_and_controls(text: str) -> str:
    out: list[str] = []
    for ch in text:
        cp = ord(ch)
        if cp in _JOINERS or cp == 0xFFFD:
            continue
        if _is_picto(ch):
            continue
        if ch != "\n" and unicodedata.category(ch) == "Cc":
            continue
        out.append(ch)
    return "".join(out)


def _clean_pass(text: str) -> str:
    text = _TAG_RE.sub(" ", text)
    text = _URL_RE.sub(" ", text)
    text = _strip_emoji_and_controls(text)
    text = _DECORATION_RE.sub("", text)
    text = _REPEATED_PUNCT_RE.sub(r"\1", text)
    text = collapse_whitespace(text)
    return nfc(text)


def clean_text(raw: str) -> str:
    """Strip markup, URLs, emoji, controls and decoration; normalize whitespace.

    Deterministic and idempotent; the worst case result is the empty string.
    Removal runs to a fixpoint: deleting one artifact may expose another
    ("<<b>>" leaves a bare tag, a control char may hide inside a URL), and
    every non-identity pass strictly shrinks the text, so this terminates.
    """
    text = raw
    for _ in range(16):  # bound is defensive; passes shrink the text
        cleaned = _clean_pass(text)
        if cleaned == text:
            return cleaned
        text = cleaned
    return text


# --------------------------------------------------------------------------
# sentence splitting

_DEFAULT_ABBREV_FILE = Path(__file__).parent / "data" / "abbreviations.txt"
_TERMINALS = ".!?"
_CLOSERS = "\"')]”’"
_OPEN_QUOTES = "\"'(“‘"


def load_abbreviations(path: str | Path | None = None) -> frozenset[str]:
    """Lowercased abbreviations (with their trailing period), one per line."""
    p = Path(path) if path is not None else _DEFAULT_ABBREV_FILE
    try:
        lines = p.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileNotReadable(str(p), str(exc)) from None
    out = set()
    for line in lines:
        token = line.strip().lower()
        if token and not token.startswith("#"):
            out.add(token if token.endswith(".") else token + ".")
    return frozenset(out)


_DEFAULT_ABBREVIATIONS: frozenset[str] | None = None


def _default_abbreviations() -> frozenset[str]:
    global _DEFAULT_ABBREVIATIONS
    if _DEFAULT_ABBREVIATIONS is None:
        _DEFAULT_ABBREVIATIONS = load_abbreviations()
    return _DEFAULT_ABBREVIATIONS


def _token_before_period(text: str, period: int) -> str:
    start = period
    while start > 0 and (text[start - 1].isalnum() or text[start - 1] == "."):
        start -= 1
    return text[start : period + 1].lower()


def _suppress_split(text: str, period: int, abbreviations: frozenset[str]) -> bool:
    token = _token_before_period(text, period)
    if token in abbreviations:
        return True
    # single-letter initials: "J. Smith"
    return len(token) == 2 and token[0].isalpha()


def split_sentences(
    text: str, abbreviations: frozenset[str] | None = None
) -> list[str]:
    """Rule-based splitting on ., ! and ? followed by a sentence opener.

    A boundary needs: terminal punctuation (plus closing quotes/brackets),
    whitespace, then an uppercase letter, digit or opening quote. A
    configurable abbreviation list suppresses false splits after "Mr.",
    "e.g.", initials, etc. No characters are lost: joining the output with
    single spaces whitespace-normalizes the input.
    """
    abbrevs = abbreviations if abbreviations is not None else _default_abbreviations()
    sentences: list[str] = []
    n = len(text)
    start = 0
    i = 0
    while i < n:
        if text[i] not in _TERMINALS:
            i += 1
            continue
        run_start = i
        while i < n and text[i] in _TERMINALS:
            i += 1
        seg_end = i
        while seg_end < n and text[seg_end] in _CLOSERS:
            seg_end += 1
        ws_end = seg_end
        while ws_end < n and text[ws_end].isspace():
            ws_end += 1
        if ws_end == seg_end or ws_end >= n:
            i = seg_end
            continue  # no whitespace after punctuation: not a boundary
        nxt = text[ws_end]
        if not (nxt.isupper() or nxt.isdigit() or nxt in _OPEN_QUOTES):
            i = seg_end
            continue
        if (
            seg_end - run_start == 1
            and text[run_start] == "."
            and _suppress_split(text, run_start, abbrevs)
        ):
            i = seg_end
            continue
        piece = text[start:seg_end].strip()
        if piece:
            sentences.append(piece)
        start = ws_end
        i = ws_end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# --------------------------------------------------------------------------
# document handling

def select_wikipedia_intro(doc: RawDocument) -> str:
    """Body of the first section whose heading is absent or "Introduction"."""
    for section in doc.sections:
        heading = (section.heading or "").strip()
        if not heading or heading.lower() == "introduction":
            return section.body
    raise NoIntroSection(doc.doc_id)


@dataclass(frozen=True, slots=True)
class CapConfig:
    per_page_max: int = 10
    per_type_per_source_max: int = 10_000


@dataclass
class IngestReport:
    documents: int = 0
    skipped_no_intro: int = 0
    sentences: int = 0
    capped_pairs: set = field(default_factory=set)


def ingest(
    docs: Iterable[RawDocument],
    caps: CapConfig = CapConfig(),
    *,
    report: IngestReport | None = None,
) -> list[Sentence]:
    """Clean, split and cap a document stream, preserving document order.

    Wikipedia documents are reduced to their introduction and contribute at
    most ``per_page_max`` sentences each; every (entity type hint, source)
    pair stops accepting sentences once ``per_type_per_source_max`` is
    reached. Documents without an introduction are skipped, never fatal.
    """
    rep = report if report is not None else IngestReport()
    taken: dict[tuple[str | None, SourceKind], int] = {}
    seen_ids: set[str] = set()
    out: list[Sentence] = []
    for doc in docs:
        if doc.doc_id in seen_ids:
            raise ValueError(f"duplicate doc_id in ingestion run: {doc.doc_id!r}")
        seen_ids.add(doc.doc_id)
        rep.documents += 1
        if doc.source is SourceKind.WIKIPEDIA:
            try:
                body = select_wikipedia_intro(doc)
            except NoIntroSection:
                rep.skipped_no_intro += 1
                continue
        else:
            body = "\n".join(section.body for section in doc.sections)
        pieces = split_sentences(clean_text(body))
        if doc.source is SourceKind.WIKIPEDIA:
            pieces = pieces[: caps.per_page_max]
        key = (doc.entity_type_hint, doc.source)
        for ordinal, piece in enumerate(pieces):
            count = taken.get(key, 0)
            if count >= caps.per_type_per_source_max:
                rep.capped_pairs.add(key)
                break
            taken[key] = count + 1
            out.append(
                Sentence(
                    sent_id=f"{doc.doc_id}#{ordinal}",
                    text=piece,
                    source=doc.source,
                    doc_id=doc.doc_id,
                    entity_type_hint=doc.entity_type_hint,
                )
            )
    rep.sentences = len(out)
    return out


# --------------------------------------------------------------------------
# JSONL formats

def document_from_dict(
    data: dict, default_source: SourceKind | None = None
) -> RawDocument:
    source = data.get("source")
    if source is None:
        if default_source is None:
            raise ValueError(
                f"document {data.get('doc_id')!r} has no source and no default was given"
            )
        kind = default_source
    else:
        kind = SourceKind(source)
    return RawDocument(
        doc_id=str(data["doc_id"]),
        source=kind,
        sections=tuple(
            Section(heading=s.get("heading"), body=s.get("body", ""))
            for s in data["sections"]
        ),
        entity_type_hint=data.get("entity_type_hint"),
        page_id=data.get("page_id"),
    )


def read_documents(
    path: str | Path, default_source: SourceKind | None = None
) -> Iterator[RawDocument]:
    p = Path(path)
    try:
        handle = p.open("r", encoding="utf-8", errors="ignore")
    except OSError as exc:
        raise FileNotReadable(str(p), str(exc)) from None
    with handle:
        for line in handle:
            line = line.strip()
            if line:
                yield document_from_dict(json.loads(line), default_source)


def read_sentences(path: str | Path) -> list[Sentence]:
    p = Path(path)
    try:
        handle = p.open("r", encoding="utf-8")
    except OSError as exc:
        raise FileNotReadable(str(p), str(exc)) from None
    with handle:
        return [
            Sentence.from_dict(json.loads(line))
            for line in handle
            if line.strip()
        ]


def write_sentences(sentences: Iterable[Sentence], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for sentence in sentences:
            handle.write(json.dumps(sentence.to_dict(), ensure_ascii=False) + "\n")
