"""Persistent review state for the human verification loop.

State is a fold over an append-only JSONL journal: one event per line,
fsynced before the call returns, so reopening a store after a crash
replays to exactly the acknowledged state. Concurrent annotators are
handled with per-record revision numbers (optimistic concurrency);
conflicting writes are rejected, never merged.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .corpus import Sentence
from .dataset import tokenize
from .errors import (
    MisalignedSpan,
    OverlapViolation,
    PathExists,
    StaleRevision,
    UnknownSentence,
)
from .gazetteer import EntityType
from .matcher import ORIGIN_HUMAN, AnnotatedSentence, ConflictNote, Span

log = logging.getLogger(__name__)

STATUS_PENDING = "PENDING"
STATUS_ACCEPTED = "ACCEPTED"
STATUS_CORRECTED = "CORRECTED"
STATUS_SKIPPED = "SKIPPED"
STATUSES = (STATUS_PENDING, STATUS_ACCEPTED, STATUS_CORRECTED, STATUS_SKIPPED)

ACTIONS = ("accept", "skip", "add_span", "edit_span", "delete_span")

_PALETTE = (
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
    "#76b7b2", "#edc948", "#9c755f", "#bab0ac", "#d37295",
)


@dataclass(frozen=True)
class ReviewRecord:
    sentence: Sentence
    status: str
    current_spans: tuple[Span, ...]
    conflicts: tuple[ConflictNote, ...]
    history: tuple[dict, ...]
    revision: int
    annotator_id: str | None = None

    @property
    def sent_id(self) -> str:
        return self.sentence.sent_id

    @property
    def mutated(self) -> bool:
        return any(
            h["action"] in ("add_span", "edit_span", "delete_span")
            for h in self.history
        )

    def to_dict(self) -> dict:
        return {
            "sentence": self.sentence.to_dict(),
            "status": self.status,
            "spans": [s.to_dict() for s in self.current_spans],
            "conflicts": [c.to_dict() for c in self.conflicts],
            "history": list(self.history),
            "revision": self.revision,
            "annotator_id": self.annotator_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReviewRecord":
        return cls(
            sentence=Sentence.from_dict(data["sentence"]),
            status=data["status"],
            current_spans=tuple(Span.from_dict(s) for s in data["spans"]),
            conflicts=tuple(
                ConflictNote.from_dict(c) for c in data.get("conflicts", ())
            ),
            history=tuple(data.get("history", ())),
            revision=int(data["revision"]),
            annotator_id=data.get("annotator_id"),
        )


def _span_from_payload(payload: dict, text: str) -> Span:
    start = int(payload["start"])
    end = int(payload["end"])
    if not (0 <= start < end <= len(text)):
        raise MisalignedSpan(f"span ({start}, {end}) out of range for text length {len(text)}")
    return Span(
        start=start,
        end=end,
        entity_type=payload["type"],
        surface=text[start:end],
        dict_item_id=payload.get("item_id"),
        origin=payload.get("origin", ORIGIN_HUMAN),
    )


def _check_alignment(text: str, span: Span) -> None:
    tokens = tokenize(text)
    covered = [t for t in tokens if t.start < span.end and t.end > span.start]
    if not covered:
        raise MisalignedSpan(f"span ({span.start}, {span.end}) covers no token")
    if covered[0].start != span.start or covered[-1].end != span.end:
        raise MisalignedSpan(
            f"span ({span.start}, {span.end}) does not sit on token boundaries"
        )
    for token in covered:
        if token.start < span.start or token.end > span.end:
            raise MisalignedSpan(
                f"span ({span.start}, {span.end}) cuts token {token.text!r}"
            )


def _check_overlap(spans: Iterable[Span], candidate: Span) -> None:
    for other in spans:
        if candidate.start < other.end and candidate.end > other.start:
            raise OverlapViolation(
                f"span ({candidate.start}, {candidate.end}) overlaps "
                f"({other.start}, {other.end})"
            )


def _sorted_spans(spans: Iterable[Span]) -> tuple[Span, ...]:
    return tuple(sorted(spans, key=lambda s: (s.start, s.end)))


class ReviewStore:
    """Journal-backed map of sent_id -> ReviewRecord."""

    def __init__(self, path: str | Path, *, _replay: bool) -> None:
        self.path = Path(path)
        self._records: dict[str, ReviewRecord] = {}
        self._order: list[str] = []
        self.entity_types: list[EntityType] = []
        self._handle = None
        if _replay:
            self._replay_journal()
        self._handle = self.path.open("a", encoding="utf-8")

    # -- construction -------------------------------------------------

    @classmethod
    def initialize(
        cls,
        annotated: Iterable[AnnotatedSentence],
        path: str | Path,
        *,
        entity_types: Iterable[EntityType] = (),
        force: bool = False,
    ) -> "ReviewStore":
        """Seed a new journal: one PENDING record per sentence, AUTO spans."""
        p = Path(path)
        if p.exists() and not force:
            raise PathExists(str(p))
        if p.exists():
            p.unlink()
        p.parent.mkdir(parents=True, exist_ok=True)
        store = cls(p, _replay=False)
        types = list(entity_types)
        store.entity_types = types
        store._append(
            {
                "event": "types",
                "types": [
                    {"name": t.name, "display": t.display} for t in types
                ],
            }
        )
        for a in annotated:
            record = ReviewRecord(
                sentence=a.sentence,
                status=STATUS_PENDING,
                current_spans=a.spans,
                conflicts=a.conflicts,
                history=(),
                revision=0,
            )
            store._records[record.sent_id] = record
            store._order.append(record.sent_id)
            store._append({"event": "init", "record": record.to_dict()})
        return store

    @classmethod
    def open(cls, path: str | Path) -> "ReviewStore":
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"no review journal at {p}")
        return cls(p, _replay=True)

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "ReviewStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- journal ------------------------------------------------------

    def _append(self, event: dict) -> None:
        line = json.dumps(event, ensure_ascii=False)
        if self._handle is None:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")
                handle.flush()
                os.fsync(handle.fileno())
        else:
            self._handle.write(line + "\n")
            self._handle.flush()
            os.fsync(self._handle.fileno())

    def _replay_journal(self) -> None:
        with self.path.open("r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.endswith("\n"):
                    log.warning(
                        "journal %s: dropping torn trailing line %d", self.path, line_no
                    )
                    break
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except json.JSONDecodeError:
                    log.warning(
                        "journal %s: dropping undecodable line %d", self.path, line_no
                    )
                    break
                self._fold(event)

    def _fold(self, event: dict) -> None:
        kind = event.get("event")
        if kind == "types":
            self.entity_types = [
                EntityType(t["name"], t.get("display", "")) for t in event["types"]
            ]
        elif kind in ("init", "snapshot"):
            record = ReviewRecord.from_dict(event["record"])
            if record.sent_id not in self._records:
                self._order.append(record.sent_id)
            self._records[record.sent_id] = record
        elif kind == "decision":
            self._apply_to_record(
                event["sent_id"],
                event["annotator_id"],
                event["action"],
                event.get("span"),
                event.get("old_span"),
                event["ts"],
            )
        else:
            log.warning("journal %s: unknown event %r ignored", self.path, kind)

    # -- queries ------------------------------------------------------

    def __len__(self) -> int:
        return len(self._records)

    def get(self, sent_id: str) -> ReviewRecord:
        record = self._records.get(sent_id)
        if record is None:
            raise UnknownSentence(sent_id)
        return record

    def records(
        self, *, status: str | None = None, entity_type: str | None = None
    ) -> list[ReviewRecord]:
        out = []
        for sent_id in self._order:
            record = self._records[sent_id]
            if status is not None and record.status != status:
                continue
            if entity_type is not None and not any(
                s.entity_type == entity_type for s in record.current_spans
            ):
                continue
            out.append(record)
        return out

    def progress(self) -> dict:
        by_status = {status: 0 for status in STATUSES}
        by_type: dict[str, int] = {}
        for record in self._records.values():
            by_status[record.status] += 1
            for span in record.current_spans:
                by_type[span.entity_type] = by_type.get(span.entity_type, 0) + 1
        return {
            "total": len(self._records),
            "by_status": by_status,
            "spans_by_type": dict(sorted(by_type.items())),
        }

    def type_config(self) -> list[dict]:
        return [
            {
                "name": t.name,
                "display": t.display,
                "color": _PALETTE[i % len(_PALETTE)],
            }
            for i, t in enumerate(self.entity_types)
        ]

    # -- mutations ----------------------------------------------------

    def _apply_to_record(
        self,
        sent_id: str,
        annotator_id: str,
        action: str,
        span_payload: dict | None,
        old_span_payload: dict | None,
        ts: int,
    ) -> ReviewRecord:
        record = self.get(sent_id)
        text = record.sentence.text
        spans = list(record.current_spans)
        if action == "accept":
            status = STATUS_CORRECTED if record.mutated else STATUS_ACCEPTED
        elif action == "skip":
            status = STATUS_SKIPPED
        elif action == "add_span":
            if span_payload is None:
                raise MisalignedSpan("add_span requires a span")
            new_span = _span_from_payload(span_payload, text)
            _check_alignment(text, new_span)
            _check_overlap(spans, new_span)
            spans.append(new_span)
            status = STATUS_CORRECTED
        elif action == "delete_span":
            if span_payload is None:
                raise MisalignedSpan("delete_span requires a span")
            target = self._find(spans, span_payload)
            spans.remove(target)
            status = STATUS_CORRECTED
        elif action == "edit_span":
            if span_payload is None or old_span_payload is None:
                raise MisalignedSpan("edit_span requires old_span and span")
            target = self._find(spans, old_span_payload)
            spans.remove(target)
            new_span = _span_from_payload(span_payload, text)
            _check_alignment(text, new_span)
            _check_overlap(spans, new_span)
            spans.append(new_span)
            status = STATUS_CORRECTED
        else:
            raise ValueError(f"unknown action {action!r}")
        entry = {
            "ts": ts,
            "annotator_id": annotator_id,
            "action": action,
            "span": span_payload,
            "old_span": old_span_payload,
        }
        updated = replace(
            record,
            status=status,
            current_spans=_sorted_spans(spans),
            history=record.history + (entry,),
            revision=record.revision + 1,
            annotator_id=annotator_id,
        )
        self._records[sent_id] = updated
        return updated

    @staticmethod
    def _find(spans: list[Span], payload: dict) -> Span:
        start, end = int(payload["start"]), int(payload["end"])
        for span in spans:
            if span.start == start and span.end == end:
                if "type" in payload and span.entity_type != payload["type"]:
                    continue
                return span
        raise MisalignedSpan(f"no span ({start}, {end}) on this sentence")

    def apply_decision(
        self,
        sent_id: str,
        annotator_id: str,
        action: str,
        *,
        revision: int | None = None,
        span: dict | None = None,
        old_span: dict | None = None,
        ts: int | None = None,
    ) -> ReviewRecord:
        """Validate, apply, journal (fsync), then return the updated record.

        ``revision`` must echo the revision the client read; a mismatch
        raises StaleRevision and changes nothing.
        """
        record = self.get(sent_id)
        if revision is not None and revision != record.revision:
            raise StaleRevision(sent_id, record.revision, revision)
        if ts is None:
            ts = time.time_ns() // 1_000_000
        updated = self._apply_to_record(sent_id, annotator_id, action, span, old_span, ts)
        self._append(
            {
                "event": "decision",
                "sent_id": sent_id,
                "annotator_id": annotator_id,
                "action": action,
                "span": span,
                "old_span": old_span,
                "ts": ts,
            }
        )
        return updated

    def export_verified(self) -> list[AnnotatedSentence]:
        """ACCEPTED and CORRECTED records as annotated sentences, input order."""
        out = []
        for sent_id in self._order:
            record = self._records[sent_id]
            if record.status in (STATUS_ACCEPTED, STATUS_CORRECTED):
                out.append(
                    AnnotatedSentence(
                        sentence=record.sentence,
                        spans=record.current_spans,
                        conflicts=record.conflicts,
                    )
                )
        return out

    def accept_all_pending(self, annotator_id: str = "auto") -> int:
        """Bulk-accept every PENDING record (the --auto-accept path).

        Uses ts=0 so reruns from identical inputs produce byte-identical
        journals.
        """
        count = 0
        for sent_id in self._order:
            if self._records[sent_id].status == STATUS_PENDING:
                self.apply_decision(sent_id, annotator_id, "accept", ts=0)
                count += 1
        return count

    def compact(self) -> None:
        """Rewrite the journal as one snapshot per record (same state)."""
        tmp = self.path.with_suffix(self.path.suffix + ".compact")
        with tmp.open("w", encoding="utf-8") as handle:
            handle.write(
                json.dumps(
                    {
                        "event": "types",
                        "types": [
                            {"name": t.name, "display": t.display}
                            for t in self.entity_types
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
            for sent_id in self._order:
                handle.write(
                    json.dumps(
                        {
                            "event": "snapshot",
                            "record": self._records[sent_id].to_dict(),
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
            handle.flush()
            os.fsync(handle.fileno())
        if self._handle is not None:
            self._handle.close()
        os.replace(tmp, self.path)
        self._handle = self.path.open("a", encoding="utf-8")


def init_store(
    annotated: Iterable[AnnotatedSentence],
    path: str | Path,
    *,
    entity_types: Iterable[EntityType] = (),
    force: bool = False,
) -> ReviewStore:
    return ReviewStore.initialize(
        annotated, path, entity_types=entity_types, force=force
    )


def open_store(path: str | Path) -> ReviewStore:
    return ReviewStore.open(path)
