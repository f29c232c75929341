"""Agreement statistics (Cohen's and Fleiss' kappa) and span-level P/R/F1.

Kappas are returned in [-1, 1]; table formatting turns them into
percentages. Degenerate chance agreement (p_e == 1) is fixed by
convention: kappa is 1 when observed agreement is also perfect, else 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from .dataset import spans_to_bio
from .errors import (
    EmptyInput,
    LengthMismatch,
    RowSumMismatch,
    SentenceSetMismatch,
    TooFewRaters,
)
from .matcher import AnnotatedSentence

Label = Hashable


@dataclass(frozen=True)
class LabelSequence:
    annotator_id: str
    labels: tuple[Label, ...]


def cohen_kappa(a: Sequence[Label], b: Sequence[Label]) -> float:
    """(p_o - p_e) / (1 - p_e) over two equally long label sequences."""
    if len(a) != len(b):
        raise LengthMismatch(f"sequences differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise EmptyInput("cannot compute kappa on empty sequences")
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    categories = set(a) | set(b)
    freq_a = {c: 0 for c in categories}
    freq_b = {c: 0 for c in categories}
    for x in a:
        freq_a[x] += 1
    for y in b:
        freq_b[y] += 1
    expected = sum(freq_a[c] * freq_b[c] for c in categories) / (n * n)
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


def fleiss_kappa(matrix: Sequence[Sequence[int]], n_raters: int) -> float:
    """Standard Fleiss computation over an item x category count matrix."""
    if n_raters < 2:
        raise TooFewRaters(f"need >= 2 raters, got {n_raters}")
    if not matrix:
        raise EmptyInput("empty rating matrix")
    n_items = len(matrix)
    n_categories = len(matrix[0])
    for i, row in enumerate(matrix):
        if len(row) != n_categories:
            raise RowSumMismatch(f"row {i} has {len(row)} categories, expected {n_categories}")
        if sum(row) != n_raters:
            raise RowSumMismatch(f"row {i} sums to {sum(row)}, expected {n_raters}")
    p_bar = sum(
        (sum(v * v for v in row) - n_raters) / (n_raters * (n_raters - 1))
        for row in matrix
    ) / n_items
    total = n_items * n_raters
    proportions = [
        sum(row[j] for row in matrix) / total for j in range(n_categories)
    ]
    p_e = sum(p * p for p in proportions)
    if p_e == 1.0:
        return 1.0 if p_bar == 1.0 else 0.0
    return (p_bar - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class AgreementReport:
    pairwise: dict[tuple[str, str], float]
    fleiss: float | None
    unit: str
    items: int

    def to_dict(self) -> dict:
        return {
            "unit": self.unit,
            "items": self.items,
            "pairwise": {f"{a}/{b}": k for (a, b), k in sorted(self.pairwise.items())},
            "fleiss": self.fleiss,
        }


def _token_label_sequences(
    annotations: Sequence[tuple[str, Sequence[AnnotatedSentence]]]
) -> list[LabelSequence]:
    """Token-level BIO labels per annotator, aligned over shared sent_ids."""
    references = {a.sentence.sent_id: a for a in annotations[0][1]}
    order = [a.sentence.sent_id for a in annotations[0][1]]
    for annotator_id, sentences in annotations[1:]:
        ids = {a.sentence.sent_id for a in sentences}
        if ids != set(order):
            raise SentenceSetMismatch(
                f"annotator {annotator_id!r} covers a different sentence set"
            )
    out: list[LabelSequence] = []
    for annotator_id, sentences in annotations:
        by_id = {a.sentence.sent_id: a for a in sentences}
        labels: list[str] = []
        for sent_id in order:
            annotated = by_id[sent_id]
            if annotated.sentence.text != references[sent_id].sentence.text:
                raise SentenceSetMismatch(
                    f"sentence {sent_id!r} text differs between annotators"
                )
            labels.extend(spans_to_bio(annotated).tags)
        out.append(LabelSequence(annotator_id, tuple(labels)))
    return out


def _span_label_sequences(
    annotations: Sequence[tuple[str, Sequence[AnnotatedSentence]]]
) -> list[LabelSequence]:
    """Span-identity decisions over the union of everyone's proposed spans."""
    candidates: set[tuple[str, int, int]] = set()
    for _, sentences in annotations:
        for annotated in sentences:
            for span in annotated.spans:
                candidates.add((annotated.sentence.sent_id, span.start, span.end))
    ordered = sorted(candidates)
    out: list[LabelSequence] = []
    for annotator_id, sentences in annotations:
        claimed: dict[tuple[str, int, int], str] = {}
        for annotated in sentences:
            for span in annotated.spans:
                claimed[(annotated.sentence.sent_id, span.start, span.end)] = (
                    span.entity_type
                )
        labels = tuple(claimed.get(c, "NONE") for c in ordered)
        out.append(LabelSequence(annotator_id, labels))
    return out


def agreement_report(
    annotations: Sequence[tuple[str, Sequence[AnnotatedSentence]]],
    unit: str = "token",
) -> AgreementReport:
    """Pairwise Cohen's kappa plus Fleiss' kappa across all annotators."""
    if len(annotations) < 2:
        raise TooFewRaters("need at least two annotators")
    if unit == "token":
        sequences = _token_label_sequences(annotations)
    elif unit == "span":
        sequences = _span_label_sequences(annotations)
    else:
        raise ValueError(f"unknown agreement unit {unit!r}")
    pairwise: dict[tuple[str, str], float] = {}
    for i in range(len(sequences)):
        for j in range(i + 1, len(sequences)):
            key = (sequences[i].annotator_id, sequences[j].annotator_id)
            pairwise[key] = cohen_kappa(sequences[i].labels, sequences[j].labels)
    fleiss: float | None = None
    n_items = len(sequences[0].labels) if sequences else 0
    if n_items:
        categories = sorted(
            {label for seq in sequences for label in seq.labels}, key=str
        )
        cat_index = {c: k for k, c in enumerate(categories)}
        matrix = [[0] * len(categories) for _ in range(n_items)]
        for seq in sequences:
            if len(seq.labels) != n_items:
                raise LengthMismatch("annotator sequences differ in length")
            for i, label in enumerate(seq.labels):
                matrix[i][cat_index[label]] += 1
        fleiss = fleiss_kappa(matrix, n_raters=len(sequences))
    return AgreementReport(
        pairwise=pairwise, fleiss=fleiss, unit=unit, items=n_items
    )


# --------------------------------------------------------------------------
# span-level evaluation

@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def _prf(tp: int, fp: int, fn: int) -> PRF:
    # Convention: an empty class on both sides is perfect, a one-sided
    # empty denominator is 0.
    if tp == 0 and fp == 0 and fn == 0:
        return PRF(1.0, 1.0, 1.0, 0, 0, 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else 0.0
    )
    return PRF(precision, recall, f1, tp, fp, fn)


def span_prf(
    gold: Sequence[AnnotatedSentence], pred: Sequence[AnnotatedSentence]
) -> dict[str, PRF]:
    """Exact-match span scores per entity type plus a "micro" aggregate.

    A predicted span is a true positive iff a gold span with the same
    (start, end, type) exists in the same sentence.
    """
    gold_by_id = {a.sentence.sent_id: a for a in gold}
    pred_by_id = {a.sentence.sent_id: a for a in pred}
    if set(gold_by_id) != set(pred_by_id):
        raise SentenceSetMismatch("gold and pred cover different sentence sets")
    tp: dict[str, int] = {}
    fp: dict[str, int] = {}
    fn: dict[str, int] = {}
    types: set[str] = set()
    for sent_id, gold_sentence in gold_by_id.items():
        gold_spans = {
            (s.start, s.end, s.entity_type) for s in gold_sentence.spans
        }
        pred_spans = {
            (s.start, s.end, s.entity_type) for s in pred_by_id[sent_id].spans
        }
        for start, end, etype in pred_spans:
            types.add(etype)
            if (start, end, etype) in gold_spans:
                tp[etype] = tp.get(etype, 0) + 1
            else:
                fp[etype] = fp.get(etype, 0) + 1
        for start, end, etype in gold_spans - pred_spans:
            types.add(etype)
            fn[etype] = fn.get(etype, 0) + 1
    result = {
        etype: _prf(tp.get(etype, 0), fp.get(etype, 0), fn.get(etype, 0))
        for etype in sorted(types)
    }
    result["micro"] = _prf(
        sum(tp.values()), sum(fp.values()), sum(fn.values())
    )
    return result
