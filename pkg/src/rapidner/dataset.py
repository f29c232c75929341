"""BIO tagging, dataset splitting, CoNLL export and corpus statistics.

Spans become token-level B-/I-/O labels over a whitespace+punctuation
tokenizer whose offsets are exact, so the conversion is reversible.
Splitting is hash-based (seeded, per sentence id) instead of shuffle-based:
the same (seed, ids) always produce the same membership, on any machine.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Sentence, SourceKind
from .errors import BadRatios, MalformedBIO, SpanTokenMisalignment
from .matcher import AnnotatedSentence, Span
from .textutil import is_word_char

log = logging.getLogger(__name__)

OUTSIDE = "O"


@dataclass(frozen=True, slots=True)
class Token:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class TaggedSentence:
    sent_id: str
    tokens: tuple[Token, ...]
    tags: tuple[str, ...]
    source: SourceKind

    def __post_init__(self) -> None:
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags must have the same length")
        prev_type: str | None = None
        for tag in self.tags:
            if tag == OUTSIDE:
                prev_type = None
                continue
            prefix, _, etype = tag.partition("-")
            if prefix not in ("B", "I") or not etype:
                raise ValueError(f"bad BIO tag {tag!r}")
            if prefix == "I" and prev_type != etype:
                raise ValueError(f"I-{etype} without a preceding B-{etype}")
            prev_type = etype


def tokenize(sentence: Sentence | str) -> tuple[Token, ...]:
    """Whitespace tokens with leading/trailing punctuation peeled off.

    Internal hyphens and apostrophes stay inside their token ("soy-milk's");
    offsets index the original text exactly.
    """
    text = sentence.text if isinstance(sentence, Sentence) else sentence
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        # peel leading non-word characters
        lead = i
        while lead < j and not is_word_char(text, lead):
            tokens.append(Token(text[lead : lead + 1], lead, lead + 1))
            lead += 1
        # peel trailing non-word characters (collect, emit after the core)
        trail = j
        while trail > lead and not is_word_char(text, trail - 1):
            trail -= 1
        if trail > lead:
            tokens.append(Token(text[lead:trail], lead, trail))
        for k in range(trail, j):
            if k >= lead:
                tokens.append(Token(text[k : k + 1], k, k + 1))
        i = j
    return tuple(tokens)


def spans_to_bio(annotated: AnnotatedSentence) -> TaggedSentence:
    """Tokens fully inside a span get B-/I- tags; partial coverage is an error.

    Matcher spans are word-boundary aligned and cannot misalign; a
    misaligned span therefore points at a bad human edit and is rejected
    back to review rather than silently clipped.
    """
    sentence = annotated.sentence
    tokens = tokenize(sentence)
    tags = [OUTSIDE] * len(tokens)
    for span in annotated.spans:
        covered = [
            idx
            for idx, tok in enumerate(tokens)
            if tok.start < span.end and tok.end > span.start
        ]
        if not covered:
            raise SpanTokenMisalignment(sentence.sent_id, span.start, span.end)
        for idx in covered:
            tok = tokens[idx]
            if tok.start < span.start or tok.end > span.end:
                raise SpanTokenMisalignment(sentence.sent_id, span.start, span.end)
        tags[covered[0]] = f"B-{span.entity_type}"
        for idx in covered[1:]:
            tags[idx] = f"I-{span.entity_type}"
    return TaggedSentence(
        sent_id=sentence.sent_id,
        tokens=tokens,
        tags=tuple(tags),
        source=sentence.source,
    )


def bio_to_spans(tagged: TaggedSentence, *, lenient: bool = False) -> list[Span]:
    """Maximal B/I runs back to spans (origin AUTO; provenance is not in BIO).

    A stray I-tag is malformed; in lenient mode it is repaired to B and
    counted in the log.
    """
    spans: list[Span] = []
    run_start: int | None = None
    run_end = 0
    run_type: str | None = None
    repairs = 0

    def flush() -> None:
        nonlocal run_start, run_type
        if run_start is None:
            return
        start = tagged.tokens[run_start].start
        end = tagged.tokens[run_end].end
        surface_parts: list[str] = []
        for idx in range(run_start, run_end + 1):
            if idx > run_start:
                gap = tagged.tokens[idx].start - tagged.tokens[idx - 1].end
                surface_parts.append(" " * gap)
            surface_parts.append(tagged.tokens[idx].text)
        spans.append(
            Span(
                start=start,
                end=end,
                entity_type=run_type or "",
                surface="".join(surface_parts),
            )
        )
        run_start = None
        run_type = None

    for idx, tag in enumerate(tagged.tags):
        if tag == OUTSIDE:
            flush()
            continue
        prefix, _, etype = tag.partition("-")
        if prefix == "I" and run_type != etype:
            if not lenient:
                raise MalformedBIO(
                    f"{tagged.sent_id}: I-{etype} at token {idx} without matching B"
                )
            repairs += 1
            prefix = "B"
        if prefix == "B":
            flush()
            run_start = idx
            run_type = etype
        run_end = idx
    flush()
    if repairs:
        log.warning("repaired %d stray I tags in %s", repairs, tagged.sent_id)
    return spans


# --------------------------------------------------------------------------
# splitting

@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[TaggedSentence, ...]
    dev: tuple[TaggedSentence, ...]
    test: tuple[TaggedSentence, ...]
    seed: int
    ratios: tuple[float, float, float]

    def parts(self) -> dict[str, tuple[TaggedSentence, ...]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}


def split_fraction(seed: int, sent_id: str) -> float:
    """Deterministic point in [0, 1) for one sentence id under one seed."""
    key = seed.to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(sent_id.encode("utf-8"), key=key, digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != 3:
        raise BadRatios(f"expected 3 ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios):
        raise BadRatios("ratios must be non-negative")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios sum to {sum(ratios)!r}, not 1")
    return (float(ratios[0]), float(ratios[1]), float(ratios[2]))


def split_dataset(
    sentences: Sequence[TaggedSentence],
    ratios: Sequence[float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetSplit:
    """Assign each sentence to train/dev/test by keyed hash of its id.

    Membership depends only on (seed, sent_id): reordering the input or
    adding unrelated sentences never moves an existing one.
    """
    r = check_ratios(ratios)
    buckets: tuple[list[TaggedSentence], ...] = ([], [], [])
    cut1 = r[0]
    cut2 = r[0] + r[1]
    for sentence in sentences:
        u = split_fraction(seed, sentence.sent_id)
        if u < cut1:
            buckets[0].append(sentence)
        elif u < cut2:
            buckets[1].append(sentence)
        else:
            buckets[2].append(sentence)
    return DatasetSplit(
        train=tuple(buckets[0]),
        dev=tuple(buckets[1]),
        test=tuple(buckets[2]),
        seed=seed,
        ratios=r,
    )


def _largest_remainder(n: int, ratios: tuple[float, float, float]) -> list[int]:
    ideal = [n * r for r in ratios]
    counts = [int(x) for x in ideal]
    # hand out the rounding slack by largest fractional part, train first
    order = sorted(range(3), key=lambda i: (-(ideal[i] - counts[i]), i))
    for i in range(n - sum(counts)):
        counts[order[i % 3]] += 1
    return counts


def stratified_split_dataset(
    sentences: Sequence[TaggedSentence],
    ratios: Sequence[float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> DatasetSplit:
    """Split with exact per-source proportions (largest-remainder rounding).

    Within each source, sentences are ordered by their keyed hash and the
    buckets are cut at exact sizes. Unlike the global hash split, adding a
    sentence may move its neighbours within the same source; that is
    inherent to holding the per-group proportions exact.
    """
    r = check_ratios(ratios)
    groups: dict[str, list[TaggedSentence]] = {}
    for sentence in sentences:
        groups.setdefault(sentence.source.value, []).append(sentence)
    buckets: tuple[list[TaggedSentence], ...] = ([], [], [])
    for source in sorted(groups):
        members = sorted(
            groups[source],
            key=lambda s: (split_fraction(seed, s.sent_id), s.sent_id),
        )
        n_train, n_dev, _ = _largest_remainder(len(members), r)
        buckets[0].extend(members[:n_train])
        buckets[1].extend(members[n_train : n_train + n_dev])
        buckets[2].extend(members[n_train + n_dev :])
    return DatasetSplit(
        train=tuple(buckets[0]),
        dev=tuple(buckets[1]),
        test=tuple(buckets[2]),
        seed=seed,
        ratios=r,
    )


# --------------------------------------------------------------------------
# CoNLL

def conll_lines(sentences: Iterable[TaggedSentence]) -> str:
    blocks = [
        "\n".join(f"{tok.text}\t{tag}" for tok, tag in zip(s.tokens, s.tags))
        for s in sentences
    ]
    return "\n\n".join(blocks) + "\n" if blocks else ""


def write_conll(sentences: Iterable[TaggedSentence], path: str | Path) -> None:
    """token<TAB>tag lines, blank line between sentences, LF, trailing newline.

    Written via a sibling temp file and an atomic rename, so consumers
    never observe a torn file.
    """
    target = Path(path)
    partial = target.with_name(target.name + ".partial")
    partial.write_text(conll_lines(sentences), encoding="utf-8", newline="\n")
    partial.replace(target)


def parse_conll(
    path: str | Path, known_types: Iterable[str] | None = None
) -> list[tuple[list[str], list[str]]]:
    """Read back (tokens, tags) pairs; unknown tags are a hard error."""
    allowed = None if known_types is None else set(known_types)
    sentences: list[tuple[list[str], list[str]]] = []
    tokens: list[str] = []
    tags: list[str] = []
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").split("\n"), start=1
    ):
        if not line.strip():
            if tokens:
                sentences.append((tokens, tags))
                tokens, tags = [], []
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedBIO(f"line {line_no}: expected token<TAB>tag, got {line!r}")
        token, tag = parts
        if tag != OUTSIDE:
            prefix, _, etype = tag.partition("-")
            if prefix not in ("B", "I") or not etype:
                raise MalformedBIO(f"line {line_no}: bad tag {tag!r}")
            if allowed is not None and etype not in allowed:
                raise MalformedBIO(f"line {line_no}: unknown entity type {etype!r}")
        tokens.append(token)
        tags.append(tag)
    if tokens:
        sentences.append((tokens, tags))
    return sentences


def export_split(
    split: DatasetSplit, out_dir: str | Path, *, stats: "StatsReport | None" = None
) -> dict[str, Path]:
    """Write train/dev/test CoNLL files plus a metadata sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for name, part in split.parts().items():
        path = out / f"{name}.conll"
        write_conll(part, path)
        written[name] = path
    meta = {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "counts": {name: len(part) for name, part in split.parts().items()},
        "total": sum(len(part) for part in split.parts().values()),
    }
    if stats is not None:
        meta["stats"] = stats.to_dict()
    meta_path = out / "metadata.json"
    meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    written["metadata"] = meta_path
    return written


# --------------------------------------------------------------------------
# statistics

@dataclass(frozen=True)
class StatsCell:
    entity_tokens: int
    entities: int
    sentences: int


@dataclass(frozen=True)
class StatsReport:
    """Entity tokens / entities / sentences per (entity type, source)."""

    cells: dict[tuple[str, str], StatsCell]

    def entity_types(self) -> list[str]:
        return sorted({etype for etype, _ in self.cells})

    def sources(self) -> list[str]:
        return sorted({source for _, source in self.cells})

    def cell(self, etype: str, source: str) -> StatsCell:
        return self.cells.get((etype, source), StatsCell(0, 0, 0))

    def row_total(self, etype: str) -> StatsCell:
        return _sum_cells(v for (e, _), v in self.cells.items() if e == etype)

    def totals(self) -> StatsCell:
        return _sum_cells(self.cells.values())

    def to_dict(self) -> dict:
        per_type: dict[str, dict] = {}
        for (etype, source), cell in sorted(self.cells.items()):
            per_type.setdefault(etype, {})[source] = {
                "entity_tokens": cell.entity_tokens,
                "entities": cell.entities,
                "sentences": cell.sentences,
            }
        totals = self.totals()
        return {
            "per_type": per_type,
            "totals": {
                "entity_tokens": totals.entity_tokens,
                "entities": totals.entities,
                "sentences": totals.sentences,
            },
        }


def _sum_cells(cells: Iterable[StatsCell]) -> StatsCell:
    tok = ent = sent = 0
    for cell in cells:
        tok += cell.entity_tokens
        ent += cell.entities
        sent += cell.sentences
    return StatsCell(tok, ent, sent)


def compute_stats(sentences: Iterable[TaggedSentence]) -> StatsReport:
    """Count non-O tokens, B tags, and sentences with at least one entity.

    A sentence is counted once per (type, source) in which it has an
    entity, so the total sentence figure sums those cells.
    """
    tokens: dict[tuple[str, str], int] = {}
    entities: dict[tuple[str, str], int] = {}
    sent_types: dict[tuple[str, str], int] = {}
    for sentence in sentences:
        source = sentence.source.value
        seen_types: set[str] = set()
        for tag in sentence.tags:
            if tag == OUTSIDE:
                continue
            prefix, _, etype = tag.partition("-")
            key = (etype, source)
            tokens[key] = tokens.get(key, 0) + 1
            if prefix == "B":
                entities[key] = entities.get(key, 0) + 1
                seen_types.add(etype)
        for etype in seen_types:
            key = (etype, source)
            sent_types[key] = sent_types.get(key, 0) + 1
    cells = {
        key: StatsCell(
            entity_tokens=tokens.get(key, 0),
            entities=entities.get(key, 0),
            sentences=sent_types.get(key, 0),
        )
        for key in set(tokens) | set(entities) | set(sent_types)
    }
    return StatsReport(cells=cells)
