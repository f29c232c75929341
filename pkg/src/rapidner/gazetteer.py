"""Per-entity-type surface-form dictionaries built from sub-graph heads.

A dictionary maps one entity type to a set of hyponym surface forms.
Entries are deduplicated under a normalization key (NFC + simple case
fold + collapsed whitespace); the original casing is preserved because
the matcher reports the original text. Set algebra (union, subtract) and
plain-text list augmentation mirror how per-type dictionaries are grown
and cleaned before matching.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import FileNotReadable
from .kgstore import INSTANCE_OF, SUBCLASS_OF, ItemIndex, SubGraph
from .textutil import normalize_key

log = logging.getLogger(__name__)

PROV_KG_P31 = "KG_P31"
PROV_KG_P279 = "KG_P279"
PROV_AUGMENT_LIST = "AUGMENT_LIST"
PROV_MANUAL = "MANUAL"

_NAME_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")

# Entries outside these limits are almost certainly KG noise and would
# poison matching; both knobs are per-call configurable.
MIN_SURFACE_CHARS = 2
MAX_SURFACE_TOKENS = 10


@dataclass(frozen=True, slots=True)
class EntityType:
    """A named entity category (the tag that ends up in B-/I- labels)."""

    name: str
    display: str = ""

    def __post_init__(self) -> None:
        if not _NAME_RE.match(self.name):
            raise ValueError(
                f"entity type name {self.name!r} must match [A-Z][A-Z0-9_]*"
            )
        if not self.display:
            object.__setattr__(self, "display", self.name.capitalize())


@dataclass(frozen=True, slots=True)
class DictEntry:
    surface: str
    norm_key: str
    item_id: int | None
    provenance: str

    def __post_init__(self) -> None:
        if self.norm_key != normalize_key(self.surface):
            raise ValueError("norm_key does not match surface")
        is_kg = self.provenance.startswith("KG_")
        if is_kg != (self.item_id is not None):
            raise ValueError("item_id must be present exactly for KG_* provenance")


def normalize_entry(surface: str) -> str:
    """The dedup key: NFC, simple case fold, whitespace collapsed and trimmed."""
    return normalize_key(surface)


def _make_entry(surface: str, item_id: int | None, provenance: str) -> DictEntry:
    return DictEntry(surface, normalize_key(surface), item_id, provenance)


@dataclass(frozen=True)
class Dictionary:
    """Immutable set of surface forms for one entity type, unique per norm_key."""

    entity_type: EntityType
    entries: tuple[DictEntry, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for entry in self.entries:
            if not entry.norm_key:
                raise ValueError("empty entry after normalization")
            if entry.norm_key in seen:
                raise ValueError(f"duplicate norm_key {entry.norm_key!r}")
            seen.add(entry.norm_key)

    def __len__(self) -> int:
        return len(self.entries)

    def norm_keys(self) -> frozenset[str]:
        return frozenset(e.norm_key for e in self.entries)

    def surfaces(self) -> list[str]:
        return [e.surface for e in self.entries]

    def to_json(self) -> str:
        payload = {
            "schema": 1,
            "entity_type": self.entity_type.name,
            "display": self.entity_type.display,
            "entries": [
                {
                    "surface": e.surface,
                    "item_id": e.item_id,
                    "provenance": e.provenance,
                }
                for e in self.entries
            ],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Dictionary":
        data = json.loads(text)
        if data.get("schema") != 1:
            raise ValueError(f"unsupported dictionary schema: {data.get('schema')!r}")
        etype = EntityType(data["entity_type"], data.get("display", ""))
        entries = [
            _make_entry(e["surface"], e.get("item_id"), e["provenance"])
            for e in data["entries"]
        ]
        return cls(etype, tuple(entries))


def load_dictionary(path: str | Path) -> Dictionary:
    p = Path(path)
    try:
        return Dictionary.from_json(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FileNotReadable(str(p), str(exc)) from None


def save_dictionary(d: Dictionary, path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    partial = p.with_name(p.name + ".partial")
    partial.write_text(d.to_json(), encoding="utf-8")
    partial.replace(p)


def _surface_ok(surface: str, max_tokens: int, min_chars: int) -> bool:
    key = normalize_key(surface)
    if len(key) < min_chars:
        return False
    if len(key.split(" ")) > max_tokens:
        return False
    return True


@dataclass
class BuildReport:
    unresolved_heads: int = 0
    rejected_surfaces: int = 0
    cross_relation_duplicates: int = 0


def _provenance_for(relation: int) -> str:
    if relation == INSTANCE_OF:
        return PROV_KG_P31
    if relation == SUBCLASS_OF:
        return PROV_KG_P279
    # relations outside the canonical pair still carry their origin
    return f"KG_P{relation}"


def build_dictionary(
    subgraph: SubGraph,
    items: ItemIndex,
    etype: EntityType,
    *,
    max_tokens: int = MAX_SURFACE_TOKENS,
    min_chars: int = MIN_SURFACE_CHARS,
    report: BuildReport | None = None,
) -> Dictionary:
    """Resolve sub-graph heads to labels, one entry per distinct norm_key.

    Relations are visited with instance-of before subclass-of (then any
    others in ascending order); the first relation to contribute a key
    keeps its provenance. Heads missing from the item index are counted,
    never fatal.
    """
    rep = report if report is not None else BuildReport()
    order = sorted(
        subgraph.heads_by_relation,
        key=lambda r: (r != INSTANCE_OF, r != SUBCLASS_OF, r),
    )
    entries: dict[str, DictEntry] = {}
    for relation in order:
        provenance = _provenance_for(relation)
        for head in sorted(subgraph.heads_by_relation[relation]):
            record = items.lookup(head)
            if record is None:
                rep.unresolved_heads += 1
                continue
            if not _surface_ok(record.label, max_tokens, min_chars):
                rep.rejected_surfaces += 1
                log.warning(
                    "rejecting dictionary surface %r (length limits)", record.label
                )
                continue
            key = normalize_key(record.label)
            if key in entries:
                rep.cross_relation_duplicates += 1
                continue
            entries[key] = _make_entry(record.label, head, provenance)
    if rep.unresolved_heads:
        log.warning("%d sub-graph heads had no item record", rep.unresolved_heads)
    return Dictionary(etype, tuple(entries.values()))


def union(a: Dictionary, b: Dictionary, etype: EntityType | None = None) -> Dictionary:
    """Set union on norm_key; colliding keys keep the entry from ``a``."""
    result_type = etype if etype is not None else a.entity_type
    entries: dict[str, DictEntry] = {e.norm_key: e for e in a.entries}
    for entry in b.entries:
        entries.setdefault(entry.norm_key, entry)
    return Dictionary(result_type, tuple(entries.values()))


def subtract(a: Dictionary, b: Dictionary) -> Dictionary:
    """Entries of ``a`` whose norm_key does not occur in ``b``."""
    drop = b.norm_keys()
    return Dictionary(
        a.entity_type, tuple(e for e in a.entries if e.norm_key not in drop)
    )


def augment_from_list(
    d: Dictionary,
    path: str | Path,
    *,
    max_tokens: int = MAX_SURFACE_TOKENS,
    min_chars: int = MIN_SURFACE_CHARS,
    report: BuildReport | None = None,
) -> Dictionary:
    """Add one surface form per non-comment line unless its key already exists."""
    p = Path(path)
    try:
        lines = p.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileNotReadable(str(p), str(exc)) from None
    rep = report if report is not None else BuildReport()
    entries: dict[str, DictEntry] = {e.norm_key: e for e in d.entries}
    for line in lines:
        surface = line.strip()
        if not surface or surface.startswith("#"):
            continue
        if not _surface_ok(surface, max_tokens, min_chars):
            rep.rejected_surfaces += 1
            log.warning("rejecting augment surface %r (length limits)", surface)
            continue
        key = normalize_key(surface)
        if key not in entries:
            entries[key] = _make_entry(surface, None, PROV_AUGMENT_LIST)
    return Dictionary(d.entity_type, tuple(entries.values()))


def manual_dictionary(
    etype: EntityType, surfaces: Iterable[str], provenance: str = PROV_MANUAL
) -> Dictionary:
    """Small hand-made dictionaries, mostly for tests and quick experiments."""
    entries: dict[str, DictEntry] = {}
    for surface in surfaces:
        key = normalize_key(surface)
        if key and key not in entries:
            entries[key] = _make_entry(surface, None, provenance)
    return Dictionary(etype, tuple(entries.values()))
