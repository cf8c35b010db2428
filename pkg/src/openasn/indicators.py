"""Scientific age, venue classification, h-index and the three indicators."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .model import Doi, IndicatorTriple, Publication, VenueClass

__all__ = [
    "InvalidYears",
    "MissingCount",
    "NormalizationStrategy",
    "ScientificAge",
    "scientific_age",
    "classify_publication",
    "h_index",
    "raw_indicators",
    "compute_indicators",
]

CROSSREF_JOURNAL_TYPES = frozenset({"journal-article"})
DBLP_JOURNAL_KIND = "article"


class InvalidYears(ValueError):
    pass


class MissingCount(KeyError):
    pass


@dataclass(frozen=True)
class ScientificAge:
    years: int

    def __post_init__(self) -> None:
        if self.years < 1:
            raise ValueError("scientific age is at least one year")


@dataclass(frozen=True)
class NormalizationStrategy:
    """How raw indicator values are scaled by scientific age.

    ``kind`` is one of ``"none"``, ``"per-year"`` or ``"window"``; ``years``
    is only meaningful for ``"window"``.
    """

    kind: str = "none"
    years: int | None = None

    KINDS = ("none", "per-year", "window")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown normalization {self.kind!r}")
        if self.kind == "window" and (self.years is None or self.years < 1):
            raise ValueError("window normalization needs years >= 1")

    @classmethod
    def none(cls) -> NormalizationStrategy:
        return cls("none")

    @classmethod
    def per_year(cls) -> NormalizationStrategy:
        return cls("per-year")

    @classmethod
    def window(cls, years: int) -> NormalizationStrategy:
        return cls("window", years)

    def apply(self, raw: float, age: ScientificAge) -> float:
        if self.kind == "none":
            return float(raw)
        if self.kind == "per-year":
            return raw / age.years
        assert self.years is not None
        return raw * min(1.0, self.years / age.years)


def scientific_age(first_pub_year: int, reference_year: int) -> ScientificAge:
    # Inclusive count: a first paper in the reference year gives age 1.
    if first_pub_year > reference_year:
        raise InvalidYears(
            f"first publication year {first_pub_year} is after reference year {reference_year}"
        )
    return ScientificAge(reference_year - first_pub_year + 1)


def _dblp_says_journal(kind: str) -> bool:
    # "article:informal" marks preprint entries such as CoRR, which are not journal papers.
    return kind.strip().lower() == DBLP_JOURNAL_KIND


def classify_publication(dblp_kind: str | None, crossref_type: str | None) -> VenueClass:
    dblp_kind = dblp_kind or None
    crossref_type = crossref_type or None
    if dblp_kind is None and crossref_type is None:
        return VenueClass.UNKNOWN
    if crossref_type is not None and crossref_type.strip().lower() in CROSSREF_JOURNAL_TYPES:
        return VenueClass.JOURNAL
    if dblp_kind is not None and _dblp_says_journal(dblp_kind):
        return VenueClass.JOURNAL
    return VenueClass.NON_JOURNAL


def h_index(citation_counts: Iterable[int]) -> int:
    ordered = sorted(citation_counts, reverse=True)
    h = 0
    for rank, count in enumerate(ordered, start=1):
        if count < rank:
            break
        h = rank
    return h


def raw_indicators(
    publications: Sequence[Publication], counts: Mapping[Doi, int]
) -> tuple[int, int, int]:
    """Unnormalized (journal papers, citations, h-index)."""
    per_pub = []
    for pub in publications:
        try:
            per_pub.append(counts[pub.doi])
        except KeyError:
            raise MissingCount(pub.doi) from None
    journals = sum(1 for pub in publications if pub.venue_class is VenueClass.JOURNAL)
    return journals, sum(per_pub), h_index(per_pub)


def compute_indicators(
    publications: Sequence[Publication],
    counts: Mapping[Doi, int],
    age: ScientificAge,
    strategy: NormalizationStrategy = NormalizationStrategy(),
) -> IndicatorTriple:
    a, b, c = raw_indicators(publications, counts)
    return IndicatorTriple(strategy.apply(a, age), strategy.apply(b, age), strategy.apply(c, age))
