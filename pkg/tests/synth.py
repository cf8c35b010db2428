"""Synthetic data generators and independent oracles shared by the tests."""

from __future__ import annotations

import csv
import io
import random
import re
from collections import defaultdict

_VALID = re.compile(r"10\.\d+/\S+")
MALFORMED = ["not-a-doi", "10.1234/", "", "11.1000/x", "doi:"]


def synthetic_dump(rows: int, pool: int, seed: int = 0) -> str:
    """COCI-shaped CSV text with duplicates, self-loops, malformed and upper-cased DOIs."""
    rng = random.Random(seed)
    dois = [f"10.{1000 + i % 97}/syn.{i}" for i in range(pool)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["oci", "citing", "cited", "creation", "timespan", "journal_sc", "author_sc"])
    emitted: list[tuple[str, str]] = []
    for n in range(rows):
        roll = rng.random()
        if roll < 0.05 and emitted:
            citing, cited = rng.choice(emitted)
        elif roll < 0.06:
            citing = cited = rng.choice(dois)
        elif roll < 0.07:
            citing, cited = rng.choice(MALFORMED), rng.choice(dois)
            if rng.random() < 0.5:
                citing, cited = cited, citing
        else:
            citing, cited = rng.choice(dois), rng.choice(dois)
            if rng.random() < 0.02:
                citing = citing.upper()
            emitted.append((citing, cited))
        w.writerow([f"oci{n}", citing, cited, "2018-01", "P1Y", "no", "no"])
    return buf.getvalue()


def _norm(raw: str) -> str | None:
    value = raw.strip().lower()
    return value if _VALID.fullmatch(value) else None


def recount(csv_text: str, citing_col: str = "citing", cited_col: str = "cited") -> dict[str, int]:
    """Two-pass oracle: collect distinct valid non-loop pairs, then count per cited DOI."""
    reader = csv.DictReader(io.StringIO(csv_text))
    pairs = set()
    for row in reader:
        citing, cited = _norm(row[citing_col]), _norm(row[cited_col])
        if citing and cited and citing != cited:
            pairs.add((citing, cited))
    counts: dict[str, int] = defaultdict(int)
    for _, cited in pairs:
        counts[cited] += 1
    return dict(counts)


def recount_rows(csv_text: str) -> dict[str, int]:
    """Oracle tallies for the build report counters."""
    reader = csv.DictReader(io.StringIO(csv_text))
    tally = {"rows": 0, "malformed": 0, "loops": 0, "dups": 0}
    seen = set()
    for row in reader:
        tally["rows"] += 1
        citing, cited = _norm(row["citing"]), _norm(row["cited"])
        if not (citing and cited):
            tally["malformed"] += 1
        elif citing == cited:
            tally["loops"] += 1
        elif (citing, cited) in seen:
            tally["dups"] += 1
        else:
            seen.add((citing, cited))
    return tally
