from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, strategies as st

from rapidner.corpus import (
    CapConfig,
    IngestReport,
    RawDocument,
    Section,
    SourceKind,
    clean_text,
    document_from_dict,
    ingest,
    read_sentences,
    select_wikipedia_intro,
    split_sentences,
    write_sentences,
)
from rapidner.errors import NoIntroSection


def doc(doc_id, source, sections, hint=None, page_id=None):
    return RawDocument(
        doc_id=doc_id,
        source=source,
        sections=tuple(Section(h, b) for h, b in sections),
        entity_type_hint=hint,
        page_id=page_id,
    )


class TestCleanText:
    def test_tags_urls_emoji(self):
        assert clean_text("Check <b>this</b> https://x.co/a now 🎉") == "Check this now"

    def test_fixed_point(self):
        assert clean_text("plain text") == "plain text"

    def test_empty(self):
        assert clean_text("") == ""

    def test_www_urls(self):
        assert clean_text("go to www.example.com/x?y=1 please") == "go to please"

    def test_control_chars_removed_lf_collapsed(self):
        assert clean_text("a\x00b\x07c") == "abc"
        assert clean_text("line one\nline two") == "line one line two"

    def test_decoration_and_repeated_punctuation(self):
        assert clean_text("wow!!! *bold* ~x~ ^up^") == "wow! bold x up"
        assert clean_text("really??!,, ok") == "really?!, ok"

    def test_zwj_emoji_sequence(self):
        assert clean_text("family: 👩‍👩‍👧 here") == "family: here"
        assert clean_text("thumbs 👍🏽 up") == "thumbs up"

    def test_nfc_normalization(self):
        # e + combining acute becomes precomposed é
        assert clean_text("café") == "café"

    def test_idempotent_when_removal_exposes_more(self):
        # deleting one artifact can expose another: must run to a fixpoint
        assert clean_text("<<b>>") == ""
        assert clean_text("ht\x00tp://example.com stays") == "stays"
        # a control char hiding inside "www." is deleted, exposing the URL
        assert clean_text("ww\x01w.example.com x") == "x"
        # tags are replaced by a space, so no URL is reassembled here
        assert clean_text("w<i>ww.example.com x") == "w ww.example.com x"

    @given(st.text(max_size=200))
    def test_idempotent(self, s):
        once = clean_text(s)
        assert clean_text(once) == once


class TestSplitSentences:
    def test_basic(self):
        assert split_sentences("I love tea. Do you?") == ["I love tea.", "Do you?"]

    def test_single(self):
        assert split_sentences("One sentence only") == ["One sentence only"]

    def test_abbreviation_suppression(self):
        assert split_sentences("Mr. Smith drinks mate. He is happy.") == [
            "Mr. Smith drinks mate.",
            "He is happy.",
        ]

    def test_eg_and_initials(self):
        assert split_sentences("Use e.g. Mate. J. Smith agrees.") == [
            "Use e.g. Mate.",
            "J. Smith agrees.",
        ]

    def test_no_split_before_lowercase(self):
        assert split_sentences("we drank mate. then tea") == ["we drank mate. then tea"]

    def test_exclamation_runs_and_quotes(self):
        assert split_sentences('Really?! "Yes." He left.') == [
            "Really?!",
            '"Yes."',
            "He left.",
        ]

    def test_digit_starts_sentence(self):
        assert split_sentences("Score was good. 42 players came.") == [
            "Score was good.",
            "42 players came.",
        ]

    @given(st.text(alphabet=" .!?abcDEF'\"", max_size=80))
    def test_lossless_on_cleaned_input(self, s):
        # the contract takes cleaned text (whitespace already collapsed)
        cleaned = " ".join(s.split())
        joined = " ".join(split_sentences(cleaned))
        assert joined == cleaned


class TestSelectIntro:
    def test_headingless_first(self):
        d = doc("w1", SourceKind.WIKIPEDIA, [(None, "Latte is…"), ("History", "…")])
        assert select_wikipedia_intro(d) == "Latte is…"

    def test_no_intro(self):
        d = doc("w2", SourceKind.WIKIPEDIA, [("History", "…")])
        with pytest.raises(NoIntroSection):
            select_wikipedia_intro(d)

    def test_first_qualifying_wins(self):
        d = doc("w3", SourceKind.WIKIPEDIA, [("Introduction", "A"), (None, "B")])
        assert select_wikipedia_intro(d) == "A"

    def test_case_insensitive_heading(self):
        d = doc("w4", SourceKind.WIKIPEDIA, [("INTRODUCTION", "A")])
        assert select_wikipedia_intro(d) == "A"


class TestIngest:
    def test_per_page_cap(self):
        body = " ".join(f"Sentence number {i} is here." for i in range(14))
        d = doc("w1", SourceKind.WIKIPEDIA, [(None, body)], hint="DRINK")
        out = ingest([d], CapConfig(per_page_max=10))
        assert len(out) == 10
        assert [s.sent_id for s in out] == [f"w1#{i}" for i in range(10)]

    def test_per_page_cap_only_for_wikipedia(self):
        body = " ".join(f"Sentence number {i} is here." for i in range(14))
        d = doc("r1", SourceKind.REDDIT, [(None, body)], hint="DRINK")
        out = ingest([d], CapConfig(per_page_max=10))
        assert len(out) == 14

    def test_per_type_per_source_cap(self):
        docs = [
            doc(f"r{i}", SourceKind.REDDIT, [(None, "One here. Two here.")], hint="DRINK")
            for i in range(2)
        ]
        out = ingest(docs, CapConfig(per_type_per_source_max=3))
        assert len(out) == 3

    def test_separate_pairs_have_separate_caps(self):
        docs = [
            doc("a", SourceKind.REDDIT, [(None, "One here. Two here.")], hint="DRINK"),
            doc("b", SourceKind.REDDIT, [(None, "One here. Two here.")], hint="FOOD"),
        ]
        out = ingest(docs, CapConfig(per_type_per_source_max=2))
        assert len(out) == 4

    def test_empty_stream(self):
        assert ingest([]) == []

    def test_no_intro_doc_skipped_not_fatal(self):
        docs = [
            doc("w1", SourceKind.WIKIPEDIA, [("History", "Nope.")]),
            doc("r1", SourceKind.REDDIT, [(None, "Fine sentence.")]),
        ]
        report = IngestReport()
        out = ingest(docs, report=report)
        assert [s.doc_id for s in out] == ["r1"]
        assert report.skipped_no_intro == 1

    def test_duplicate_doc_id_rejected(self):
        docs = [
            doc("x", SourceKind.REDDIT, [(None, "A.")]),
            doc("x", SourceKind.REDDIT, [(None, "B.")]),
        ]
        with pytest.raises(ValueError):
            ingest(docs)

    def test_sent_ids_unique_and_cap_safety(self):
        rng = random.Random(5)
        docs = []
        for i in range(30):
            source = rng.choice(list(SourceKind))
            hint = rng.choice(["DRINK", "FOOD", None])
            n = rng.randint(1, 8)
            body = " ".join(f"Sentence {k} stands alone." for k in range(n))
            sections = (
                [(None, body)]
                if source is not SourceKind.WIKIPEDIA or rng.random() < 0.8
                else [("History", body)]
            )
            docs.append(doc(f"d{i}", source, sections, hint=hint))
        caps = CapConfig(per_page_max=3, per_type_per_source_max=7)
        out = ingest(docs, caps)
        ids = [s.sent_id for s in out]
        assert len(ids) == len(set(ids))
        counts: dict = {}
        for s in out:
            key = (s.entity_type_hint, s.source)
            counts[key] = counts.get(key, 0) + 1
        assert all(v <= 7 for v in counts.values())

    def test_sentences_are_cleaned(self):
        d = doc("r1", SourceKind.REDDIT, [(None, "Go <b>here</b> https://a.b now!!!")])
        out = ingest([d])
        assert out[0].text == "Go here now!"


class TestJsonl:
    def test_document_round_trip(self):
        data = {
            "doc_id": "w1",
            "source": "wikipedia",
            "entity_type_hint": "DRINK",
            "page_id": 42,
            "sections": [
                {"heading": None, "body": "Latte is a drink."},
                {"heading": "History", "body": "Old."},
            ],
        }
        d = document_from_dict(data)
        assert d.source is SourceKind.WIKIPEDIA
        assert d.page_id == 42
        assert d.sections[0].body == "Latte is a drink."

    def test_default_source_fills_missing_field(self):
        data = {"doc_id": "x", "sections": [{"heading": None, "body": "Hi."}]}
        d = document_from_dict(data, default_source=SourceKind.REDDIT)
        assert d.source is SourceKind.REDDIT
        with pytest.raises(ValueError):
            document_from_dict(data)

    def test_sentence_round_trip(self, tmp_path):
        d = doc("r1", SourceKind.REDDIT, [(None, "A latte, please.")], hint="DRINK")
        out = ingest([d])
        path = tmp_path / "sent.jsonl"
        write_sentences(out, path)
        again = read_sentences(path)
        assert again == out
        line = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
        assert set(line) == {"sent_id", "text", "source", "entity_type_hint", "doc_id"}
