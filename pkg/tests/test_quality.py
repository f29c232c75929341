from __future__ import annotations

import random

import pytest

from oracle import oracle_prf
from rapidner.corpus import Sentence, SourceKind
from rapidner.errors import (
    EmptyInput,
    LengthMismatch,
    RowSumMismatch,
    SentenceSetMismatch,
    TooFewRaters,
)
from rapidner.matcher import AnnotatedSentence, Span
from rapidner.quality import (
    agreement_report,
    cohen_kappa,
    fleiss_kappa,
    span_prf,
)


class TestCohenKappa:
    def test_identical_sequences(self):
        assert cohen_kappa(list("abcabc"), list("abcabc")) == 1.0

    def test_derived_ten_item_case(self):
        a = list("xxxxxooooo")
        b = list("xxxxooooox")
        # 8/10 agree, both marginals 0.5/0.5 -> (0.8 - 0.5) / (1 - 0.5)
        assert abs(cohen_kappa(a, b) - 0.6) <= 1e-12

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            cohen_kappa(["a"], ["a", "b"])

    def test_empty(self):
        with pytest.raises(EmptyInput):
            cohen_kappa([], [])

    def test_degenerate_marginals(self):
        assert cohen_kappa(["x", "x"], ["x", "x"]) == 1.0

    def test_symmetry_and_permutation_invariance(self):
        rng = random.Random(11)
        for _ in range(50):
            n = rng.randint(1, 40)
            a = [rng.choice("xyz") for _ in range(n)]
            b = [rng.choice("xyz") for _ in range(n)]
            k1 = cohen_kappa(a, b)
            assert k1 == cohen_kappa(b, a)
            order = list(range(n))
            rng.shuffle(order)
            k2 = cohen_kappa([a[i] for i in order], [b[i] for i in order])
            assert abs(k1 - k2) < 1e-12
            assert -1.0 - 1e-9 <= k1 <= 1.0 + 1e-9


class TestFleissKappa:
    def test_all_agree(self):
        assert fleiss_kappa([[3, 0], [0, 3], [3, 0]], 3) == 1.0

    def test_derived_diagonal(self):
        # P_bar = 1, proportions (0.5, 0.5) -> P_e = 0.5 -> kappa = 1
        assert abs(fleiss_kappa([[2, 0], [0, 2]], 2) - 1.0) <= 1e-12

    def test_derived_uniform_disagreement(self):
        # P_i = 0 each, P_bar = 0, P_e = 0.5 -> kappa = -1
        assert abs(fleiss_kappa([[1, 1], [1, 1]], 2) - (-1.0)) <= 1e-12

    def test_row_sum_mismatch(self):
        with pytest.raises(RowSumMismatch):
            fleiss_kappa([[2, 0], [1, 0]], 2)

    def test_too_few_raters(self):
        with pytest.raises(TooFewRaters):
            fleiss_kappa([[1, 0]], 1)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            fleiss_kappa([], 2)

    def test_range_on_random_matrices(self):
        rng = random.Random(12)
        for _ in range(50):
            n_raters = rng.randint(2, 5)
            n_cats = rng.randint(2, 4)
            rows = []
            for _ in range(rng.randint(1, 20)):
                counts = [0] * n_cats
                for _ in range(n_raters):
                    counts[rng.randrange(n_cats)] += 1
                rows.append(counts)
            k = fleiss_kappa(rows, n_raters)
            assert -1.0 - 1e-9 <= k <= 1.0 + 1e-9


def annotated(sent_id, text, spans):
    s = Sentence(sent_id=sent_id, text=text, source=SourceKind.OTHER, doc_id="d")
    return AnnotatedSentence(s, tuple(spans))


class TestSpanPrf:
    def test_perfect(self):
        gold = [annotated("a#0", "masala chai here", [Span(0, 11, "DRINK", "masala chai")])]
        scores = span_prf(gold, gold)
        assert scores["DRINK"].precision == 1.0
        assert scores["DRINK"].recall == 1.0
        assert scores["micro"].f1 == 1.0

    def test_half_right(self):
        gold = [
            annotated(
                "a#0",
                "masala chai and latte",
                [Span(0, 11, "DRINK", "masala chai"), Span(16, 21, "DRINK", "latte")],
            )
        ]
        pred = [
            annotated(
                "a#0",
                "masala chai and latte",
                [Span(0, 11, "DRINK", "masala chai"), Span(12, 15, "DRINK", "and")],
            )
        ]
        scores = span_prf(gold, pred)
        assert scores["DRINK"].precision == 0.5
        assert scores["DRINK"].recall == 0.5
        assert scores["DRINK"].f1 == 0.5

    def test_empty_pred_conventions(self):
        gold = [annotated("a#0", "latte here", [Span(0, 5, "DRINK", "latte")])]
        pred = [annotated("a#0", "latte here", [])]
        scores = span_prf(gold, pred)
        assert scores["DRINK"].precision == 0.0
        assert scores["DRINK"].recall == 0.0
        assert scores["DRINK"].f1 == 0.0

    def test_both_empty_is_perfect(self):
        gold = [annotated("a#0", "nothing", [])]
        scores = span_prf(gold, gold)
        assert scores["micro"].f1 == 1.0

    def test_sentence_set_mismatch(self):
        gold = [annotated("a#0", "x", [])]
        pred = [annotated("b#0", "x", [])]
        with pytest.raises(SentenceSetMismatch):
            span_prf(gold, pred)

    def test_type_must_match(self):
        gold = [annotated("a#0", "latte here", [Span(0, 5, "DRINK", "latte")])]
        pred = [annotated("a#0", "latte here", [Span(0, 5, "FOOD", "latte")])]
        scores = span_prf(gold, pred)
        assert scores["micro"].tp == 0
        assert scores["micro"].fp == 1
        assert scores["micro"].fn == 1

    def test_micro_matches_bruteforce_on_random_cases(self):
        rng = random.Random(13)
        types = ["DRINK", "FOOD"]
        for _ in range(40):
            n = rng.randint(1, 6)
            gold, pred = [], []
            gold_flat, pred_flat = [], []
            for i in range(n):
                text = "w" * 30
                g_spans, p_spans = [], []
                used_g: set[tuple[int, int]] = set()
                used_p: set[tuple[int, int]] = set()
                for _ in range(rng.randint(0, 3)):
                    start = rng.randrange(0, 28)
                    end = rng.randrange(start + 1, 30)
                    if any(start < e and end > s for s, e in used_g):
                        continue
                    used_g.add((start, end))
                    etype = rng.choice(types)
                    g_spans.append(Span(start, end, etype, text[start:end]))
                    gold_flat.append((f"s#{i}", start, end, etype))
                for _ in range(rng.randint(0, 3)):
                    start = rng.randrange(0, 28)
                    end = rng.randrange(start + 1, 30)
                    if any(start < e and end > s for s, e in used_p):
                        continue
                    used_p.add((start, end))
                    etype = rng.choice(types)
                    p_spans.append(Span(start, end, etype, text[start:end]))
                    pred_flat.append((f"s#{i}", start, end, etype))
                gold.append(annotated(f"s#{i}", text, sorted(g_spans, key=lambda s: s.start)))
                pred.append(annotated(f"s#{i}", text, sorted(p_spans, key=lambda s: s.start)))
            scores = span_prf(gold, pred)
            tp, fp, fn = oracle_prf(gold_flat, pred_flat)
            assert (scores["micro"].tp, scores["micro"].fp, scores["micro"].fn) == (
                tp,
                fp,
                fn,
            )


class TestAgreementReport:
    def _three_annotators(self):
        text = "masala chai and latte here"
        base = [Span(0, 11, "DRINK", "masala chai"), Span(16, 21, "DRINK", "latte")]
        a = [annotated("s#0", text, base)]
        b = [annotated("s#0", text, base)]
        c = [annotated("s#0", text, [Span(0, 11, "DRINK", "masala chai")])]
        return [("A", a), ("B", b), ("C", c)]

    def test_pairwise_shape(self):
        report = agreement_report(self._three_annotators(), unit="token")
        assert set(report.pairwise) == {("A", "B"), ("A", "C"), ("B", "C")}
        assert report.pairwise[("A", "B")] == 1.0
        assert report.fleiss is not None

    def test_span_unit(self):
        report = agreement_report(self._three_annotators(), unit="span")
        # union of proposed spans: two candidates
        assert report.items == 2
        assert report.pairwise[("A", "B")] == 1.0

    def test_needs_two(self):
        with pytest.raises(TooFewRaters):
            agreement_report([("A", [])])

    def test_mismatched_sentences(self):
        a = [annotated("s#0", "x y", [])]
        b = [annotated("s#1", "x y", [])]
        with pytest.raises(SentenceSetMismatch):
            agreement_report([("A", a), ("B", b)])

    def test_self_agreement_is_one(self):
        annos = self._three_annotators()
        report = agreement_report([("A", annos[0][1]), ("A2", annos[0][1])])
        assert report.pairwise[("A", "A2")] == 1.0
