"""Multi-pattern span annotation with leftmost-longest semantics.

All dictionaries are compiled into one Aho-Corasick automaton over
case-folded patterns. Annotation finds every occurrence whose start and
end sit on word boundaries, then resolves overlaps left to right: at each
position the longest boundary-valid match wins and scanning resumes at its
end. Compound entries ("Barton Premium Blend") therefore always beat their
constituent words. Exact (start, end) ties across entity types are broken
by an explicit priority order and recorded as conflicts, never dropped
silently.

Offsets are Unicode scalar indices into the sentence text; the folded text
has the same length as the original, so offsets transfer exactly.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import Sentence
from .errors import (
    EmptyDictionarySet,
    MalformedMarkup,
    MarkupMismatch,
    UnknownTypeInPriority,
)
from .gazetteer import Dictionary
from .textutil import collapse_whitespace, is_boundary, nfc, simple_fold

ORIGIN_AUTO = "AUTO"
ORIGIN_HUMAN = "HUMAN"


@dataclass(frozen=True, slots=True)
class Span:
    """One entity mention: [start, end) scalar offsets into the sentence text."""

    start: int
    end: int
    entity_type: str
    surface: str
    dict_item_id: int | None = None
    origin: str = ORIGIN_AUTO

    def to_dict(self) -> dict:
        data = {
            "start": self.start,
            "end": self.end,
            "type": self.entity_type,
            "surface": self.surface,
            "origin": self.origin,
        }
        if self.dict_item_id is not None:
            data["item_id"] = self.dict_item_id
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Span":
        return cls(
            start=int(data["start"]),
            end=int(data["end"]),
            entity_type=data["type"],
            surface=data["surface"],
            dict_item_id=data.get("item_id"),
            origin=data.get("origin", ORIGIN_AUTO),
        )


@dataclass(frozen=True, slots=True)
class ConflictNote:
    """Same (start, end) claimed by several entity types; one was chosen."""

    start: int
    end: int
    candidate_types: tuple[str, ...]
    chosen: str

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "candidates": list(self.candidate_types),
            "chosen": self.chosen,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConflictNote":
        return cls(
            start=int(data["start"]),
            end=int(data["end"]),
            candidate_types=tuple(data["candidates"]),
            chosen=data["chosen"],
        )


@dataclass(frozen=True)
class AnnotatedSentence:
    sentence: Sentence
    spans: tuple[Span, ...]
    conflicts: tuple[ConflictNote, ...] = ()

    def __post_init__(self) -> None:
        text = self.sentence.text
        prev_end = 0
        for span in self.spans:
            if not (0 <= span.start < span.end <= len(text)):
                raise ValueError(f"span offsets out of range: {span}")
            if span.start < prev_end:
                raise ValueError(f"spans overlap or are unsorted at {span}")
            if text[span.start : span.end] != span.surface:
                raise ValueError(
                    f"surface {span.surface!r} does not match text slice "
                    f"{text[span.start:span.end]!r}"
                )
            prev_end = span.end

    def to_dict(self) -> dict:
        data = self.sentence.to_dict()
        data["spans"] = [s.to_dict() for s in self.spans]
        data["conflicts"] = [c.to_dict() for c in self.conflicts]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotatedSentence":
        return cls(
            sentence=Sentence.from_dict(data),
            spans=tuple(Span.from_dict(s) for s in data.get("spans", ())),
            conflicts=tuple(
                ConflictNote.from_dict(c) for c in data.get("conflicts", ())
            ),
        )


def read_annotated(path: str | Path) -> list[AnnotatedSentence]:
    with Path(path).open("r", encoding="utf-8") as handle:
        return [
            AnnotatedSentence.from_dict(json.loads(line))
            for line in handle
            if line.strip()
        ]


def write_annotated(annotated: Iterable[AnnotatedSentence], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for a in annotated:
            handle.write(json.dumps(a.to_dict(), ensure_ascii=False) + "\n")


@dataclass(frozen=True, slots=True)
class PatternMeta:
    entity_type: str
    item_id: int | None
    surface: str


class _Automaton:
    """Plain Aho-Corasick: goto trie, failure links, merged output links."""

    __slots__ = ("goto", "fail", "out", "lengths")

    def __init__(self, patterns: list[str]) -> None:
        goto: list[dict[str, int]] = [{}]
        own: list[list[int]] = [[]]
        for pid, pattern in enumerate(patterns):
            node = 0
            for ch in pattern:
                nxt = goto[node].get(ch)
                if nxt is None:
                    goto.append({})
                    own.append([])
                    nxt = len(goto) - 1
                    goto[node][ch] = nxt
                node = nxt
            own[node].append(pid)
        fail = [0] * len(goto)
        out: list[tuple[int, ...]] = [()] * len(goto)
        out[0] = tuple(own[0])
        queue: deque[int] = deque()
        for child in goto[0].values():
            out[child] = tuple(own[child])
            queue.append(child)
        while queue:
            node = queue.popleft()
            for ch, child in goto[node].items():
                queue.append(child)
                f = fail[node]
                while f and ch not in goto[f]:
                    f = fail[f]
                fail[child] = goto[f].get(ch, 0)
                if fail[child] == child:
                    fail[child] = 0
                out[child] = tuple(own[child]) + out[fail[child]]
        self.goto = goto
        self.fail = fail
        self.out = out
        self.lengths = [len(p) for p in patterns]

    def scan(self, text: str) -> Iterator[tuple[int, int, int]]:
        """Yield (start, end, pattern_id) for every occurrence."""
        goto, fail, out = self.goto, self.fail, self.out
        node = 0
        for i, ch in enumerate(text):
            step = goto[node].get(ch)
            while step is None and node:
                node = fail[node]
                step = goto[node].get(ch)
            node = step if step is not None else 0
            if out[node]:
                end = i + 1
                for pid in out[node]:
                    yield end - self.lengths[pid], end, pid


@dataclass(frozen=True)
class Matcher:
    """Compiled, immutable multi-pattern matcher; safe for concurrent use."""

    automaton: _Automaton
    pattern_metas: tuple[tuple[PatternMeta, ...], ...]
    type_priority: tuple[str, ...]
    case_sensitive: bool
    rejected_entries: int

    @property
    def pattern_count(self) -> int:
        return sum(len(metas) for metas in self.pattern_metas)

    def _fold(self, text: str) -> str:
        return text if self.case_sensitive else simple_fold(text)

    def annotate(self, sentence: Sentence) -> AnnotatedSentence:
        """Leftmost-longest, boundary-aligned span annotation of one sentence."""
        text = sentence.text
        folded = self._fold(text)
        best_end: dict[int, int] = {}
        pattern_at: dict[tuple[int, int], int] = {}
        for start, end, pid in self.automaton.scan(folded):
            if not (is_boundary(text, start) and is_boundary(text, end)):
                continue
            pattern_at[(start, end)] = pid
            if best_end.get(start, -1) < end:
                best_end[start] = end
        spans: list[Span] = []
        conflicts: list[ConflictNote] = []
        pos = 0
        rank = {name: i for i, name in enumerate(self.type_priority)}
        for start in sorted(best_end):
            if start < pos:
                continue
            end = best_end[start]
            metas = self.pattern_metas[pattern_at[(start, end)]]
            chosen = min(metas, key=lambda m: rank[m.entity_type])
            types = sorted({m.entity_type for m in metas}, key=rank.__getitem__)
            if len(types) > 1:
                conflicts.append(
                    ConflictNote(start, end, tuple(types), chosen.entity_type)
                )
            spans.append(
                Span(
                    start=start,
                    end=end,
                    entity_type=chosen.entity_type,
                    surface=text[start:end],
                    dict_item_id=chosen.item_id,
                    origin=ORIGIN_AUTO,
                )
            )
            pos = end
        return AnnotatedSentence(sentence, tuple(spans), tuple(conflicts))


def compile(
    dicts: Iterable[Dictionary],
    priority: Iterable[str],
    *,
    case_sensitive: bool = False,
) -> Matcher:
    """Build one automaton over all dictionaries.

    Every dictionary's entity type must appear in ``priority``. The same
    folded pattern may be claimed by several types (resolved per match);
    duplicate claims within one type keep the first entry.
    """
    dict_list = list(dicts)
    priority_list = [p for p in priority]
    if not dict_list:
        raise EmptyDictionarySet("no dictionaries to compile")
    known = set(priority_list)
    for d in dict_list:
        if d.entity_type.name not in known:
            raise UnknownTypeInPriority(
                f"dictionary type {d.entity_type.name} missing from priority {priority_list}"
            )
    pattern_ids: dict[str, int] = {}
    metas: list[list[PatternMeta]] = []
    patterns: list[str] = []
    rejected = 0
    for d in dict_list:
        for entry in d.entries:
            key = (
                entry.norm_key
                if not case_sensitive
                else collapse_whitespace(nfc(entry.surface))
            )
            if not key:
                rejected += 1
                continue
            pid = pattern_ids.get(key)
            if pid is None:
                pid = len(patterns)
                pattern_ids[key] = pid
                patterns.append(key)
                metas.append([])
            if any(m.entity_type == d.entity_type.name for m in metas[pid]):
                continue  # same pattern twice within one type: first wins
            metas[pid].append(
                PatternMeta(d.entity_type.name, entry.item_id, entry.surface)
            )
    return Matcher(
        automaton=_Automaton(patterns),
        pattern_metas=tuple(tuple(m) for m in metas),
        type_priority=tuple(priority_list),
        case_sensitive=case_sensitive,
        rejected_entries=rejected,
    )


# --------------------------------------------------------------------------
# <em> markup

def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;")


def _unescape(text: str) -> str:
    return text.replace("&lt;", "<").replace("&amp;", "&")


def to_em_markup(annotated: AnnotatedSentence) -> str:
    """Sentence text with every span wrapped in an <em type="..."> element."""
    text = annotated.sentence.text
    parts: list[str] = []
    pos = 0
    for span in annotated.spans:
        parts.append(_escape(text[pos : span.start]))
        attrs = f'type="{span.entity_type}"'
        if span.dict_item_id is not None:
            attrs += f' item_id="{span.dict_item_id}"'
        parts.append(f"<em {attrs}>{_escape(span.surface)}</em>")
        pos = span.end
    parts.append(_escape(text[pos:]))
    return "".join(parts)


_EM_OPEN_RE = re.compile(r'<em type="([A-Z][A-Z0-9_]*)"(?: item_id="(\d+)")?>')
_EM_CLOSE = "</em>"


def from_em_markup(markup: str, source_sentence: Sentence) -> AnnotatedSentence:
    """Inverse of to_em_markup; offsets are recovered in unescaped space."""
    spans: list[Span] = []
    plain: list[str] = []
    length = 0
    pos = 0
    while pos < len(markup):
        lt = markup.find("<", pos)
        if lt == -1:
            chunk = _unescape(markup[pos:])
            plain.append(chunk)
            length += len(chunk)
            break
        chunk = _unescape(markup[pos:lt])
        plain.append(chunk)
        length += len(chunk)
        if markup.startswith(_EM_CLOSE, lt):
            raise MalformedMarkup(f"unexpected </em> at offset {lt}")
        m = _EM_OPEN_RE.match(markup, lt)
        if not m:
            raise MalformedMarkup(f"unrecognized tag at offset {lt}")
        close = markup.find(_EM_CLOSE, m.end())
        if close == -1:
            raise MalformedMarkup("unclosed <em> element")
        inner = markup[m.end() : close]
        if "<" in inner:
            raise MalformedMarkup("nested markup inside <em>")
        surface = _unescape(inner)
        start = length
        end = start + len(surface)
        item_id = int(m.group(2)) if m.group(2) else None
        spans.append(
            Span(
                start=start,
                end=end,
                entity_type=m.group(1),
                surface=surface,
                dict_item_id=item_id,
                origin=ORIGIN_AUTO,
            )
        )
        plain.append(surface)
        length = end
        pos = close + len(_EM_CLOSE)
    recovered = "".join(plain)
    if recovered != source_sentence.text:
        raise MarkupMismatch(
            "markup text does not match the sentence "
            f"({recovered!r} vs {source_sentence.text!r})"
        )
    return AnnotatedSentence(source_sentence, tuple(spans))
