"""Shared fixtures and random-input generators for the test suite."""

from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rapidner.corpus import Sentence, SourceKind
from rapidner.gazetteer import Dictionary, EntityType, manual_dictionary

FIXTURES = Path(__file__).parent / "fixtures"

# word pool with unicode, prefixes of each other, hyphens and apostrophes
WORDS = [
    "tea", "te", "teapot", "latte", "mate", "matcha", "chai", "masala",
    "coffee", "espresso", "milk", "soy-milk", "o'clock", "caffè", "über",
    "çay", "kue", "ku", "putu", "barton", "premium", "blend", "judo",
    "chess", "golf", "run", "runner", "bird", "birdwatching", "sahti",
]

FILLERS = [
    "the", "a", "checkmate", "climate", "ultimate", "drinks", "and",
    "sometimes", "espressos", "nonmatch", "x1", "overmatched", "greenteas",
    "of", "with", "kuek", "tealeaf",
]

TYPE_NAMES = ["DRINK", "FOOD", "HOBBY", "JOB", "PET", "SPORT"]


def random_entry(rng: random.Random, max_tokens: int = 3) -> str:
    n = rng.randint(1, max_tokens)
    return " ".join(rng.choice(WORDS) for _ in range(n))


def random_dicts(
    rng: random.Random, n_types: int = 3, max_entries: int = 50
) -> list[Dictionary]:
    names = rng.sample(TYPE_NAMES, n_types)
    return [
        manual_dictionary(
            EntityType(name),
            [random_entry(rng) for _ in range(rng.randint(1, max_entries))],
        )
        for name in names
    ]


def random_sentence_text(
    rng: random.Random, dicts: list[Dictionary], length: int = 12
) -> str:
    surfaces = [e.surface for d in dicts for e in d.entries]
    parts = []
    for _ in range(rng.randint(3, length)):
        roll = rng.random()
        if surfaces and roll < 0.45:
            parts.append(rng.choice(surfaces))
        elif roll < 0.8:
            parts.append(rng.choice(FILLERS))
        else:
            # glue a dictionary surface inside a larger word: boundary trap
            core = rng.choice(surfaces).replace(" ", "") if surfaces else "x"
            parts.append(rng.choice(["pre", ""]) + core + rng.choice(["ish", "s"]))
    text = " ".join(parts)
    if rng.random() < 0.4:
        text += rng.choice([".", "!", "?"])
    return text


def make_sentence(text: str, sent_id: str = "t#0") -> Sentence:
    return Sentence(
        sent_id=sent_id,
        text=text,
        source=SourceKind.OTHER,
        doc_id=sent_id.split("#")[0],
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
