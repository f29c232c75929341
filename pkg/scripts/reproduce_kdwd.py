#!/usr/bin/env python3
"""Reproduce the published knowledge-graph counts from a local KDWD dump.

Usage:
    python scripts/reproduce_kdwd.py /path/to/kdwd

The directory must contain statements.csv and item.csv in the KDWD layout.
Checks (exact unless noted):
  - item labeled "Food" has id 2095
  - instance-of triples total ~26M, subclass-of ~1.7M (published rounded)
  - Food sub-graph heads: 1,365 (P31) and 2,884 (P279)
  - Drink dictionary total: 529 entries

This needs the full 141M-row statements file and the 51M-row item file;
expect several minutes and a few GB of RAM. These checks are intentionally
not part of the default test suite (run `RAPIDNER_KDWD_DIR=... pytest
tests/test_acceptance.py -k kdwd` for the pytest form).
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

from rapidner.gazetteer import EntityType, build_dictionary
from rapidner.kgstore import (
    extract_subgraph,
    load_items,
    load_statements,
    resolve_topic,
)


def check(name: str, got, want, exact: bool = True) -> bool:
    ok = got == want if exact else abs(got - want) / max(want, 1) < 0.05
    marker = "ok" if ok else "MISMATCH"
    print(f"  {name}: got {got!r}, expected {want!r} -> {marker}")
    return ok


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__)
        return 2
    base = Path(sys.argv[1])
    failures = 0

    print("loading item.csv (51M rows)...")
    t0 = time.perf_counter()
    items = load_items(base / "item.csv", strict=False)
    print(f"  {len(items)} items in {time.perf_counter() - t0:.0f}s")

    food = resolve_topic(items, "Food")
    failures += not check("Food item id", food, 2095)

    print("loading statements.csv with relations {31, 279} (141M rows)...")
    t0 = time.perf_counter()
    store = load_statements(base / "statements.csv", {31, 279}, strict=False)
    print(f"  {len(store)} triples kept in {time.perf_counter() - t0:.0f}s")

    p31 = sum(1 for t in store.triples if t.relation == 31)
    p279 = len(store) - p31
    failures += not check("instance-of triples (rounded to millions)", round(p31 / 1e6), 26)
    failures += not check("subclass-of triples (rounded to 0.1M)", round(p279 / 1e5), 17)

    food_sub = extract_subgraph(store, food, [31, 279])
    failures += not check("Food P31 heads", len(food_sub.heads_by_relation[31]), 1365)
    failures += not check("Food P279 heads", len(food_sub.heads_by_relation[279]), 2884)

    drink = resolve_topic(items, "drink")
    drink_sub = extract_subgraph(store, drink, [31, 279])
    dictionary = build_dictionary(drink_sub, items, EntityType("DRINK"))
    failures += not check("Drink dictionary total", len(dictionary), 529)

    print("all checks passed" if not failures else f"{failures} checks failed")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
