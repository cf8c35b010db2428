"""Core domain types and DOI normalization."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import NewType

__all__ = [
    "Doi",
    "MalformedDoi",
    "Role",
    "Condition",
    "VenueClass",
    "Source",
    "Candidate",
    "Publication",
    "CitationEdge",
    "IndicatorTriple",
    "ThresholdSet",
    "EvaluationOutcome",
    "normalize_doi",
    "is_valid_doi_syntax",
]

Doi = NewType("Doi", str)

_DOI_RE = re.compile(r"10\.\d{1,9}/\S+")

# Longest first so "https://dx.doi.org/" is not eaten by a shorter prefix.
_DOI_PREFIXES = (
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "https://doi.org/",
    "http://doi.org/",
    "doi:",
)


class MalformedDoi(ValueError):
    """Raised when a string cannot be normalized into a DOI."""


def normalize_doi(raw: str) -> Doi:
    """Return the canonical lowercase form of ``raw``.

    Surrounding whitespace and a single resolver or ``doi:`` prefix are
    removed before validation.
    """
    value = raw.strip()
    lowered = value.lower()
    for prefix in _DOI_PREFIXES:
        if lowered.startswith(prefix):
            value = value[len(prefix):].lstrip()
            break
    value = value.lower()
    if not _DOI_RE.fullmatch(value):
        raise MalformedDoi(f"not a DOI: {raw!r}")
    return Doi(value)


def is_valid_doi_syntax(s: str) -> bool:
    return bool(_DOI_RE.fullmatch(s)) and s == s.lower()


class Role(enum.Enum):
    ASSOCIATE = "associate"
    FULL = "full"

    @classmethod
    def parse(cls, text: str) -> Role:
        key = re.sub(r"[\s_\-]", "", text.strip().lower())
        aliases = {
            "associate": cls.ASSOCIATE,
            "associateprofessor": cls.ASSOCIATE,
            "ii": cls.ASSOCIATE,
            "2": cls.ASSOCIATE,
            "full": cls.FULL,
            "fullprofessor": cls.FULL,
            "i": cls.FULL,
            "1": cls.FULL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown role: {text!r}") from None

    @property
    def label(self) -> str:
        return "Associate Professor" if self is Role.ASSOCIATE else "Full Professor"


class Condition(enum.Enum):
    """DOI-set condition; member order is the canonical reporting order."""

    CCV = "CCV"
    CDBLP = "CDBLP"
    CU = "CU"


class VenueClass(enum.Enum):
    JOURNAL = "journal"
    NON_JOURNAL = "non-journal"
    UNKNOWN = "unknown"


class Source(enum.Enum):
    CV = "cv"
    DBLP = "dblp"


@dataclass(frozen=True)
class Candidate:
    id: str
    role: Role
    name: str = ""
    orcid: str | None = None
    cv_dois: frozenset[Doi] = field(default_factory=frozenset)
    dblp_dois: frozenset[Doi] = field(default_factory=frozenset)
    first_pub_year: int | None = None


@dataclass(frozen=True)
class Publication:
    doi: Doi
    year: int | None = None
    venue_class: VenueClass = VenueClass.UNKNOWN
    sources: frozenset[Source] = frozenset({Source.CV})

    def __post_init__(self) -> None:
        if not self.sources:
            raise ValueError(f"publication {self.doi} has no source")


@dataclass(frozen=True)
class CitationEdge:
    citing: Doi
    cited: Doi
    creation: str | None = None


@dataclass(frozen=True)
class IndicatorTriple:
    """Values of the three indicators: journal papers, citations, h-index."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if not (value >= 0 and value != float("inf")):
                raise ValueError(f"indicator {name} must be finite and >= 0, got {value!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class ThresholdSet:
    role: Role
    t_a: int
    t_b: int
    t_c: int

    def __post_init__(self) -> None:
        if min(self.t_a, self.t_b, self.t_c) < 0:
            raise ValueError("thresholds must be non-negative")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.t_a, self.t_b, self.t_c)


@dataclass(frozen=True)
class EvaluationOutcome:
    pass_a: bool
    pass_b: bool
    pass_c: bool

    @property
    def overall(self) -> bool:
        return (self.pass_a + self.pass_b + self.pass_c) >= 2

    def flags(self) -> tuple[bool, bool, bool, bool]:
        """(overall, a, b, c), the row order used by the agreement tables."""
        return (self.overall, self.pass_a, self.pass_b, self.pass_c)
