"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a single PASS line with the measured numbers (visible with
``pytest -s``); a failing criterion fails its test. The KDWD reproduction
is data-gated: it runs only when RAPIDNER_KDWD_DIR points at the dump files.
"""

from __future__ import annotations

import os
import random
import shutil
import time
from pathlib import Path

import pytest
from click.testing import CliRunner

from conftest import FIXTURES, make_sentence, random_dicts, random_sentence_text
from oracle import oracle_annotate_fast
from rapidner.cli import main as cli_main
from rapidner.dataset import bio_to_spans, spans_to_bio, split_fraction
from rapidner.gazetteer import EntityType, manual_dictionary
from rapidner.matcher import compile as compile_matcher
from rapidner.quality import cohen_kappa, fleiss_kappa
from rapidner.review import init_store, open_store


def report(name: str, detail: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS ({detail})")


class TestMatcherOracleEquivalence:
    def test_200_dicts_by_50_sentences(self):
        rng = random.Random(2024)
        started = time.perf_counter()
        mismatches = 0
        checked = 0
        for _ in range(200):
            dicts = random_dicts(rng, n_types=rng.randint(1, 3), max_entries=50)
            priority = [d.entity_type.name for d in dicts]
            rng.shuffle(priority)
            matcher = compile_matcher(dicts, priority)
            entries = [
                (e.surface, d.entity_type.name) for d in dicts for e in d.entries
            ]
            for i in range(50):
                text = random_sentence_text(rng, dicts)
                got = [
                    (s.start, s.end, s.entity_type)
                    for s in matcher.annotate(make_sentence(text, f"a#{i}")).spans
                ]
                expected = oracle_annotate_fast(entries, text, priority)
                checked += 1
                if got != expected:
                    mismatches += 1
        elapsed = time.perf_counter() - started
        assert mismatches == 0
        assert elapsed < 60.0
        report(
            "matcher-oracle-equivalence",
            f"{checked} annotate calls, 0 mismatches, {elapsed:.1f}s",
        )


class TestCompoundPreservation:
    def test_1000_generated_triples(self):
        rng = random.Random(31337)
        etypes = [EntityType(n) for n in ("DRINK", "FOOD", "SPORT")]
        violations = 0
        for _ in range(1000):
            a = "".join(rng.choice("abcdefgh") for _ in range(rng.randint(2, 7)))
            b = "".join(rng.choice("ijklmnop") for _ in range(rng.randint(2, 7)))
            compound = f"{a} {b}"
            # A and B may even belong to other entity types
            da = manual_dictionary(rng.choice(etypes), [a])
            db = manual_dictionary(rng.choice(etypes), [b])
            dc = manual_dictionary(rng.choice(etypes), [compound])
            dicts = [da, db, dc]
            matcher = compile_matcher(dicts, [t.name for t in etypes])
            # carrier words use a disjoint alphabet so only the embedded
            # compound occurrence is at stake
            carrier = f"zz qq {compound} ww yy"
            start = 6
            end = start + len(compound)
            spans = matcher.annotate(make_sentence(carrier)).spans
            compound_spans = [
                s for s in spans if (s.start, s.end) == (start, end)
            ]
            split_parts = [
                s
                for s in spans
                if s.surface in (a, b) and s.start >= start and s.end <= end
            ]
            if len(compound_spans) != 1 or split_parts:
                violations += 1
        assert violations == 0
        report("compound-preservation", "1000 triples, 0 violations")


class TestThroughput:
    def test_mean_latency_under_5ms(self):
        rng = random.Random(777)
        vocab = [
            "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(rng.randint(3, 10)))
            for _ in range(1200)
        ]
        surfaces: set[str] = set()
        while len(surfaces) < 3000:
            surfaces.add(" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 3))))
        dictionary = manual_dictionary(EntityType("FOOD"), sorted(surfaces))
        matcher = compile_matcher([dictionary], ["FOOD"])
        assert matcher.pattern_count == 3000
        surface_list = sorted(surfaces)
        sentences = []
        for i in range(10_000):
            words = []
            for _ in range(rng.randint(8, 16)):
                if rng.random() < 0.2:
                    words.append(rng.choice(surface_list))
                else:
                    words.append(rng.choice(vocab))
            sentences.append(make_sentence(" ".join(words) + ".", f"p#{i}"))
        started = time.perf_counter()
        total_spans = 0
        for sentence in sentences:
            total_spans += len(matcher.annotate(sentence).spans)
        elapsed = time.perf_counter() - started
        mean_ms = elapsed / len(sentences) * 1000.0
        assert mean_ms <= 5.0, f"mean annotate latency {mean_ms:.3f} ms"
        report(
            "throughput",
            f"mean {mean_ms:.3f} ms/sentence over 10000 sentences "
            f"(3000 patterns, {total_spans} spans)",
        )


class TestBioRoundTrip:
    def test_10000_random_annotated_sentences(self):
        rng = random.Random(4242)
        violations = 0
        done = 0
        while done < 10_000:
            dicts = random_dicts(rng, n_types=rng.randint(1, 3), max_entries=25)
            matcher = compile_matcher(dicts, [d.entity_type.name for d in dicts])
            for i in range(500):
                text = random_sentence_text(rng, dicts)
                annotated = matcher.annotate(make_sentence(text, f"b#{done}"))
                tagged = spans_to_bio(annotated)
                spans = bio_to_spans(tagged)
                got = [(s.start, s.end, s.entity_type) for s in spans]
                want = [(s.start, s.end, s.entity_type) for s in annotated.spans]
                if got != want:
                    violations += 1
                done += 1
                if done >= 10_000:
                    break
        assert violations == 0
        report("bio-round-trip", f"{done} sentences, 0 violations")


class TestKappaOracles:
    def test_exact_values(self):
        a = list("xxxxxooooo")
        b = list("xxxxooooox")
        kappa = cohen_kappa(a, b)
        assert abs(kappa - 0.6) <= 1e-12
        assert cohen_kappa(a, a) == 1.0
        f_one = fleiss_kappa([[2, 0], [0, 2]], 2)
        f_minus = fleiss_kappa([[1, 1], [1, 1]], 2)
        assert abs(f_one - 1.0) <= 1e-12
        assert abs(f_minus - (-1.0)) <= 1e-12
        report(
            "kappa-oracles",
            f"cohen={kappa!r}, identical=1.0, fleiss={f_one!r}/{f_minus!r}",
        )


class TestSplitDeterminismAndRatios:
    def test_100k_ids_within_half_percent(self):
        ids = [f"doc{i}#s{i % 7}" for i in range(100_000)]
        counts = [0, 0, 0]
        for sent_id in ids:
            u = split_fraction(42, sent_id)
            counts[0 if u < 0.8 else 1 if u < 0.9 else 2] += 1
        fractions = [c / 100_000 for c in counts]
        targets = (0.8, 0.1, 0.1)
        for got, want in zip(fractions, targets):
            assert abs(got - want) <= 0.005, (fractions, targets)
        # membership identity across two runs
        second = [split_fraction(42, sent_id) for sent_id in ids[:10_000]]
        first = [split_fraction(42, sent_id) for sent_id in ids[:10_000]]
        assert first == second
        report(
            "split-determinism-ratios",
            f"fractions {[round(f, 4) for f in fractions]} vs {targets}, "
            "two runs membership-identical",
        )


class TestEndToEndFixture:
    def test_mini_pipeline_byte_identical_golden(self, tmp_path):
        target = tmp_path / "mini"
        shutil.copytree(FIXTURES / "mini", target)
        runner = CliRunner()
        started = time.perf_counter()
        run = runner.invoke(
            cli_main, ["run", "--config", str(target / "mini.toml"), "--auto-accept"]
        )
        assert run.exit_code == 0, run.output
        fin = runner.invoke(
            cli_main, ["finalize", "--config", str(target / "mini.toml")]
        )
        assert fin.exit_code == 0, fin.output
        elapsed = time.perf_counter() - started
        for name in ("train", "dev", "test"):
            got = (target / "out" / "dataset" / f"{name}.conll").read_bytes()
            want = (FIXTURES / "mini" / "golden" / f"{name}.conll").read_bytes()
            assert got == want, f"{name}.conll differs from golden"
        assert elapsed < 10.0
        report(
            "end-to-end-fixture",
            f"3 CoNLL files byte-identical to golden, {elapsed:.2f}s",
        )


class TestReviewJournalCrashSafety:
    def test_1000_random_sequences(self, tmp_path):
        from rapidner.corpus import Sentence, SourceKind
        from rapidner.dataset import tokenize
        from rapidner.matcher import AnnotatedSentence, Span
        from rapidner.errors import MisalignedSpan, OverlapViolation

        def seed():
            texts = [
                ("s#0", "I love masala chai"),
                ("s#1", "nothing to see here"),
                ("s#2", "chess and golf today"),
            ]
            out = []
            for sent_id, text in texts:
                spans = ()
                if sent_id == "s#0":
                    spans = (Span(7, 18, "DRINK", "masala chai"),)
                out.append(
                    AnnotatedSentence(
                        Sentence(sent_id=sent_id, text=text,
                                 source=SourceKind.REDDIT, doc_id="d"),
                        spans,
                    )
                )
            return out

        rng = random.Random(606)
        divergences = 0
        for round_no in range(1000):
            path = tmp_path / f"j{round_no}.journal"
            store = init_store(seed(), path)
            for _ in range(rng.randint(1, 5)):
                sent_id = rng.choice(["s#0", "s#1", "s#2"])
                record = store.get(sent_id)
                action = rng.choice(["accept", "skip", "add_span", "delete_span"])
                try:
                    if action in ("accept", "skip"):
                        store.apply_decision(sent_id, "r", action, revision=record.revision)
                    elif action == "add_span":
                        tokens = tokenize(record.sentence.text)
                        token = rng.choice(tokens)
                        store.apply_decision(
                            sent_id, "r", "add_span", revision=record.revision,
                            span={"start": token.start, "end": token.end, "type": "HOBBY"},
                        )
                    elif record.current_spans:
                        target = rng.choice(record.current_spans)
                        store.apply_decision(
                            sent_id, "r", "delete_span", revision=record.revision,
                            span={"start": target.start, "end": target.end},
                        )
                except (OverlapViolation, MisalignedSpan):
                    pass
            live = {r.sent_id: r for r in store.records()}
            store.close()
            reopened = open_store(path)
            replayed = {r.sent_id: r for r in reopened.records()}
            reopened.close()
            if replayed != live:
                divergences += 1
            path.unlink()
        assert divergences == 0
        report("review-journal-crash-safety", "1000 sequences, 0 divergences")


KDWD_DIR = os.environ.get("RAPIDNER_KDWD_DIR", "")


@pytest.mark.skipif(
    not KDWD_DIR, reason="KDWD reproduction is data-gated: set RAPIDNER_KDWD_DIR"
)
class TestKdwdReproduction:
    """Checks against the published KDWD dump (only with user-supplied data).

    26M / 1.7M are the reported rounded triple totals; the sub-graph head
    counts, topic id, and dictionary size are exact.
    """

    def test_kdwd_values(self):
        from rapidner.gazetteer import build_dictionary
        from rapidner.kgstore import (
            extract_subgraph,
            load_items,
            load_statements,
            resolve_topic,
        )

        base = Path(KDWD_DIR)
        items = load_items(base / "item.csv", strict=False)
        food = resolve_topic(items, "Food")
        assert food == 2095
        store31 = load_statements(base / "statements.csv", {31}, strict=False)
        store279 = load_statements(base / "statements.csv", {279}, strict=False)
        assert round(len(store31) / 1e6) == 26
        assert round(len(store279) / 1e5) == 17
        sub = extract_subgraph(store31, food, [31])
        assert len(sub.heads_by_relation[31]) == 1365
        sub279 = extract_subgraph(store279, food, [279])
        assert len(sub279.heads_by_relation[279]) == 2884
        drink = resolve_topic(items, "drink")
        merged = load_statements(base / "statements.csv", {31, 279}, strict=False)
        drink_sub = extract_subgraph(merged, drink, [31, 279])
        dictionary = build_dictionary(drink_sub, items, EntityType("DRINK"))
        assert len(dictionary) == 529
        report("kdwd-reproduction", "all published counts reproduced")
