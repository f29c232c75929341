"""Knowledge-graph ingestion: statements, items, pages, and topic sub-graphs.

The input files follow the KDWD layouts: ``statements.csv`` with three
integer columns (source item id, edge property id, target item id),
``item.csv`` with (item_id, label, description) and ``page.csv`` with
(page_id, item_id, title, views). Loading streams the files row by row;
memory is proportional to what is kept, so filtering by relation happens
during the read, not after it.

All loaded structures are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import AmbiguousTopic, FileNotReadable, MalformedRow, TopicNotFound

log = logging.getLogger(__name__)

INSTANCE_OF = 31
SUBCLASS_OF = 279
DEFAULT_RELATIONS = (INSTANCE_OF, SUBCLASS_OF)


@dataclass(frozen=True, slots=True)
class Triple:
    """One directed edge (head, relation, tail); all ids are positive integers."""

    head: int
    relation: int
    tail: int


@dataclass(frozen=True, slots=True)
class ItemRecord:
    item_id: int
    label: str
    description: str


@dataclass(frozen=True, slots=True)
class PageRecord:
    page_id: int
    item_id: int
    title: str
    views: int


class TripleStore:
    """Append-only triple sequence with a (tail, relation) -> heads index."""

    def __init__(self) -> None:
        self._triples: list[Triple] = []
        self._by_tail_relation: dict[tuple[int, int], list[int]] = {}
        self.skipped_rows = 0

    def add(self, triple: Triple) -> None:
        self._triples.append(triple)
        self._by_tail_relation.setdefault((triple.tail, triple.relation), []).append(
            triple.head
        )

    @property
    def triples(self) -> tuple[Triple, ...]:
        return tuple(self._triples)

    def __len__(self) -> int:
        return len(self._triples)

    def heads(self, tail: int, relation: int) -> list[int]:
        """All head ids with a (head, relation, tail) triple, in file order."""
        return list(self._by_tail_relation.get((tail, relation), ()))


class ItemIndex:
    """item_id -> record plus exact-label -> item ids (case-sensitive)."""

    def __init__(self) -> None:
        self._by_id: dict[int, ItemRecord] = {}
        self._by_label: dict[str, list[int]] = {}
        self.duplicates = 0
        self.skipped_rows = 0

    def add(self, record: ItemRecord) -> None:
        if record.item_id in self._by_id:
            self.duplicates += 1
            log.warning("duplicate item id %d ignored (first occurrence wins)", record.item_id)
            return
        self._by_id[record.item_id] = record
        self._by_label.setdefault(record.label, []).append(record.item_id)

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, item_id: int) -> bool:
        return item_id in self._by_id

    def lookup(self, item_id: int) -> ItemRecord | None:
        return self._by_id.get(item_id)

    def ids_for_label(self, label: str) -> list[int]:
        return list(self._by_label.get(label, ()))


class PageIndex:
    """page_id -> record plus item_id -> page (zero or one per item)."""

    def __init__(self) -> None:
        self._by_page_id: dict[int, PageRecord] = {}
        self._by_item_id: dict[int, PageRecord] = {}
        self.duplicates = 0
        self.skipped_rows = 0

    def add(self, record: PageRecord) -> None:
        if record.page_id in self._by_page_id:
            self.duplicates += 1
            log.warning("duplicate page id %d ignored (first occurrence wins)", record.page_id)
            return
        self._by_page_id[record.page_id] = record
        # an item may be claimed by several pages; the first one wins too
        self._by_item_id.setdefault(record.item_id, record)

    def __len__(self) -> int:
        return len(self._by_page_id)

    def lookup(self, page_id: int) -> PageRecord | None:
        return self._by_page_id.get(page_id)

    def by_item(self, item_id: int) -> PageRecord | None:
        """The page for an item, or None (an item may have no page)."""
        return self._by_item_id.get(item_id)


@dataclass(frozen=True)
class SubGraph:
    """Per-relation head sets of all triples pointing at one topic item."""

    topic_item: int
    heads_by_relation: dict[int, frozenset[int]]

    def to_json(self) -> str:
        payload = {
            "topic_item": self.topic_item,
            "heads": {
                str(rel): sorted(heads)
                for rel, heads in sorted(self.heads_by_relation.items())
            },
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SubGraph":
        data = json.loads(text)
        return cls(
            topic_item=int(data["topic_item"]),
            heads_by_relation={
                int(rel): frozenset(int(h) for h in heads)
                for rel, heads in data["heads"].items()
            },
        )


def _open_csv(path: str | Path) -> Iterator[tuple[int, list[str]]]:
    """Yield (1-based line number, row) pairs; raises FileNotReadable."""
    p = Path(path)
    try:
        handle = p.open("r", encoding="utf-8", newline="")
    except OSError as exc:
        raise FileNotReadable(str(p), str(exc)) from None
    with handle:
        reader = csv.reader(handle)
        for row in reader:
            yield reader.line_num, row


def _parse_int(value: str) -> int | None:
    try:
        return int(value.strip())
    except ValueError:
        return None


def _handle_malformed(line_no: int, detail: str, strict: bool) -> bool:
    """Returns True when the row should be skipped (lenient), raises when strict."""
    if strict:
        raise MalformedRow(line_no, detail)
    log.warning("skipping malformed row at line %d: %s", line_no, detail)
    return True


def load_statements(
    path: str | Path,
    relations: Iterable[int] | None = DEFAULT_RELATIONS,
    *,
    strict: bool = True,
) -> TripleStore:
    """Stream a statements CSV, keeping only rows whose relation is wanted.

    ``relations=None`` keeps everything. A header row is auto-detected: if
    the first row's columns do not all parse as integers it is treated as
    a header and dropped.
    """
    wanted = None if relations is None else frozenset(int(r) for r in relations)
    store = TripleStore()
    first = True
    for line_no, row in _open_csv(path):
        if not row:
            continue
        if len(row) != 3:
            if first:
                first = False
                continue  # odd-width first row can only be a header
            store.skipped_rows += _handle_malformed(
                line_no, f"expected 3 columns, got {len(row)}", strict
            )
            continue
        ints = [_parse_int(v) for v in row]
        if first:
            first = False
            if any(v is None for v in ints):
                continue  # header row
        elif any(v is None for v in ints):
            store.skipped_rows += _handle_malformed(
                line_no, f"non-integer value in {row!r}", strict
            )
            continue
        head, relation, tail = ints  # type: ignore[misc]
        if head <= 0 or relation <= 0 or tail <= 0:
            store.skipped_rows += _handle_malformed(
                line_no, f"non-positive id in {row!r}", strict
            )
            continue
        if wanted is None or relation in wanted:
            store.add(Triple(head, relation, tail))
    return store


def load_items(path: str | Path, *, strict: bool = True) -> ItemIndex:
    """Load item.csv into an ItemIndex. Duplicate ids: first wins, counted."""
    index = ItemIndex()
    first = True
    for line_no, row in _open_csv(path):
        if not row:
            continue
        if len(row) < 2:
            if first:
                first = False
                continue
            index.skipped_rows += _handle_malformed(
                line_no, f"expected >= 2 columns, got {len(row)}", strict
            )
            continue
        item_id = _parse_int(row[0])
        if first:
            first = False
            if item_id is None:
                continue  # header row
        elif item_id is None:
            index.skipped_rows += _handle_malformed(
                line_no, f"non-integer item id in {row!r}", strict
            )
            continue
        if item_id is None:
            continue
        label = row[1].strip()
        if not label:
            index.skipped_rows += _handle_malformed(line_no, "empty label", strict)
            continue
        description = row[2] if len(row) > 2 else ""
        index.add(ItemRecord(item_id, label, description))
    return index


def load_pages(path: str | Path, *, strict: bool = True) -> PageIndex:
    """Load page.csv into a PageIndex. Duplicate page ids: first wins, counted."""
    index = PageIndex()
    first = True
    for line_no, row in _open_csv(path):
        if not row:
            continue
        if len(row) != 4:
            if first:
                first = False
                continue
            index.skipped_rows += _handle_malformed(
                line_no, f"expected 4 columns, got {len(row)}", strict
            )
            continue
        page_id, item_id, views = _parse_int(row[0]), _parse_int(row[1]), _parse_int(row[3])
        if first:
            first = False
            if page_id is None or item_id is None or views is None:
                continue  # header row
        elif page_id is None or item_id is None or views is None:
            index.skipped_rows += _handle_malformed(
                line_no, f"non-integer value in {row!r}", strict
            )
            continue
        if page_id is None or item_id is None or views is None:
            continue
        if views < 0:
            index.skipped_rows += _handle_malformed(
                line_no, f"negative view count in {row!r}", strict
            )
            continue
        index.add(PageRecord(page_id, item_id, row[2], views))
    return index


def resolve_topic(index: ItemIndex, label: str) -> int:
    """Item id whose stored label equals ``label`` exactly (case-sensitive)."""
    if not label:
        raise TopicNotFound(label)
    ids = index.ids_for_label(label)
    if not ids:
        raise TopicNotFound(label)
    if len(ids) > 1:
        raise AmbiguousTopic(label, ids)
    return ids[0]


def extract_subgraph(
    store: TripleStore, topic: int, relations: Iterable[int]
) -> SubGraph:
    """Per-relation sets of heads pointing directly at ``topic``."""
    rels = [int(r) for r in relations]
    if not rels:
        raise ValueError("relations must be non-empty")
    heads_by_relation = {
        rel: frozenset(store.heads(topic, rel)) for rel in rels
    }
    return SubGraph(topic_item=topic, heads_by_relation=heads_by_relation)


def parse_relation(token: str) -> int:
    """Accept both 31 and P31 spellings of a property identifier."""
    token = token.strip()
    if token[:1].upper() == "P":
        token = token[1:]
    value = _parse_int(token)
    if value is None or value <= 0:
        raise ValueError(f"not a property identifier: {token!r}")
    return value
