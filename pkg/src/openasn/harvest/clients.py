"""Clients for DBLP, Crossref, the DOI proxy and the COCI REST index."""

from __future__ import annotations

import enum
import json
import logging
import re
import unicodedata
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass
from urllib.parse import quote

from ..model import CitationEdge, Doi, MalformedDoi, normalize_doi
from .http import EndpointError, HarvestSettings, HttpClient, NetworkError

__all__ = [
    "DEFAULT_BASE_URLS",
    "CociClient",
    "CrossrefClient",
    "DblpClient",
    "DoiProxyClient",
    "NotFound",
    "PersonMatch",
    "Resolution",
    "ResolutionStatus",
    "UnknownPerson",
    "WorkMetadata",
    "name_match_score",
]

logger = logging.getLogger(__name__)

DEFAULT_BASE_URLS = {
    "dblp": "https://dblp.org",
    "crossref": "https://api.crossref.org",
    "doi": "https://doi.org",
    "coci": "https://opencitations.net/index/coci/api/v1",
}

EXACT_NAME_SCORE = 0.9
TOKEN_SET_SCORE = 0.7
ORCID_SCORE = 1.0
ACCEPT_SCORE = 0.7

_ORCID_RE = re.compile(r"(\d{4}-\d{4}-\d{4}-\d{3}[\dX])", re.IGNORECASE)
_PID_RE = re.compile(r"^[\w\-]+/[\w.\-]+$")


class NotFound(LookupError):
    pass


class UnknownPerson(LookupError):
    pass


@dataclass(frozen=True)
class PersonMatch:
    source_person_id: str
    display_name: str
    orcid: str | None
    score: float


@dataclass(frozen=True)
class WorkMetadata:
    doi: Doi
    type_label: str
    year: int | None = None
    venue: str | None = None


class Resolution(enum.Enum):
    RESOLVES = "resolves"
    NOT_FOUND = "not-found"
    TRANSIENT_FAILURE = "transient-failure"


@dataclass(frozen=True)
class ResolutionStatus:
    kind: Resolution
    detail: str = ""


def _client(name: str, settings: HarvestSettings, **kwargs) -> HttpClient:
    base = settings.base_urls.get(name, DEFAULT_BASE_URLS[name])
    return HttpClient(name, base, settings, **kwargs)


def normalize_orcid(value: str | None) -> str | None:
    if not value:
        return None
    m = _ORCID_RE.search(value)
    return m.group(1).upper() if m else None


def _name_tokens(name: str) -> list[str]:
    text = unicodedata.normalize("NFKD", name)
    text = "".join(ch for ch in text if not unicodedata.combining(ch)).lower()
    tokens = re.findall(r"[a-z]+|\d+", text)
    # DBLP disambiguates homonyms with a trailing number, e.g. "Mario Rossi 0002".
    while tokens and tokens[-1].isdigit():
        tokens.pop()
    return tokens


def name_match_score(query: str, candidate: str) -> float:
    q, c = _name_tokens(query), _name_tokens(candidate)
    if not q or not c:
        return 0.0
    if q == c:
        return EXACT_NAME_SCORE
    if set(q) == set(c):
        return TOKEN_SET_SCORE
    return 0.0


def _first_doi(text: str) -> Doi | None:
    for token in text.split():
        try:
            return normalize_doi(token)
        except MalformedDoi:
            continue
    return None


class DblpClient:
    def __init__(self, settings: HarvestSettings, **kwargs) -> None:
        self.http = _client("dblp", settings, **kwargs)
        self.drop_stats: Counter[str] = Counter()

    def _person_xml(self, pid: str) -> ET.Element:
        if not _PID_RE.match(pid):
            raise UnknownPerson(pid)
        resp = self.http.get(f"pid/{pid}.xml")
        if resp.status == 404:
            raise UnknownPerson(pid)
        try:
            return ET.fromstring(resp.body)
        except ET.ParseError as exc:
            raise EndpointError(resp.status, resp.url) from exc

    def person_orcids(self, pid: str) -> set[str]:
        root = self._person_xml(pid)
        found: set[str] = set()
        person = root.find("person")
        if person is not None:
            for url in person.findall("url"):
                orcid = normalize_orcid(url.text) if url.text and "orcid" in url.text else None
                if orcid:
                    found.add(orcid)
        for author in root.iter("author"):
            if author.get("pid") == pid and author.get("orcid"):
                orcid = normalize_orcid(author.get("orcid"))
                if orcid:
                    found.add(orcid)
        return found

    def search_person(self, name: str, orcid: str | None = None, max_hits: int = 30) -> list[PersonMatch]:
        if not name or not name.strip():
            raise ValueError("name must be non-empty")
        resp = self.http.get("search/author/api", {"q": name, "format": "json", "h": max_hits})
        if resp.status == 404:
            return []
        hits = resp.json().get("result", {}).get("hits", {}).get("hit", []) or []
        if isinstance(hits, dict):
            hits = [hits]
        wanted = normalize_orcid(orcid)
        matches = []
        for hit in hits:
            info = hit.get("info", {})
            url = info.get("url", "")
            pid = url.split("/pid/", 1)[1] if "/pid/" in url else ""
            if not pid:
                continue
            display = info.get("author", "")
            aliases = info.get("aliases", {}).get("alias", [])
            if isinstance(aliases, str):
                aliases = [aliases]
            score = max(name_match_score(name, n) for n in [display, *aliases])
            person_orcid = None
            if wanted:
                orcids = self.person_orcids(pid)
                if wanted in orcids:
                    score, person_orcid = ORCID_SCORE, wanted
                elif orcids:
                    person_orcid = sorted(orcids)[0]
            matches.append(PersonMatch(pid, display, person_orcid, score))
        matches = [m for m in matches if m.score > 0]
        matches.sort(key=lambda m: (-m.score, m.source_person_id))
        return matches

    def publications(self, pid: str) -> list[WorkMetadata]:
        root = self._person_xml(pid)
        works: list[WorkMetadata] = []
        seen: set[str] = set()
        for record in root.findall("r"):
            for entry in record:
                kind = entry.tag
                if entry.get("publtype"):
                    kind = f"{kind}:{entry.get('publtype')}"
                doi = None
                for ee in entry.findall("ee"):
                    if ee.text and "doi.org/" in ee.text:
                        try:
                            doi = normalize_doi(ee.text)
                        except MalformedDoi:
                            continue
                        break
                if doi is None:
                    self.drop_stats["without_doi"] += 1
                    continue
                if doi in seen:
                    self.drop_stats["duplicate_doi"] += 1
                    continue
                seen.add(doi)
                year_text = entry.findtext("year")
                venue = entry.findtext("journal") or entry.findtext("booktitle")
                works.append(
                    WorkMetadata(
                        doi,
                        kind,
                        int(year_text) if year_text and year_text.isdigit() else None,
                        venue,
                    )
                )
        return works


class CrossrefClient:
    def __init__(self, settings: HarvestSettings, **kwargs) -> None:
        self.http = _client("crossref", settings, **kwargs)

    def work(self, doi: Doi) -> WorkMetadata:
        resp = self.http.get(f"works/{quote(doi, safe='/')}")
        if resp.status == 404:
            raise NotFound(doi)
        message = resp.json().get("message", {})
        year = None
        for field in ("issued", "published-print", "published-online", "created"):
            parts = (message.get(field) or {}).get("date-parts") or [[None]]
            if parts and parts[0] and parts[0][0]:
                year = int(parts[0][0])
                break
        venues = message.get("container-title") or []
        return WorkMetadata(doi, message.get("type", ""), year, venues[0] if venues else None)


class DoiProxyClient:
    def __init__(self, settings: HarvestSettings, **kwargs) -> None:
        self.http = _client("doi", settings, **kwargs)

    def resolve(self, doi: Doi) -> ResolutionStatus:
        try:
            resp = self.http.get(f"api/handles/{quote(doi, safe='/')}")
        except (NetworkError, EndpointError) as exc:
            return ResolutionStatus(Resolution.TRANSIENT_FAILURE, str(exc))
        try:
            code = resp.json().get("responseCode")
        except (ValueError, AttributeError):
            code = None
        # Handle API codes: 1 = found, 200 = found but no values, 100 = not found.
        if resp.status == 200 and code in (1, 200):
            return ResolutionStatus(Resolution.RESOLVES)
        if resp.status == 404 or code == 100:
            return ResolutionStatus(Resolution.NOT_FOUND)
        return ResolutionStatus(Resolution.TRANSIENT_FAILURE, f"unexpected response code {code!r}")


class CociClient:
    def __init__(self, settings: HarvestSettings, **kwargs) -> None:
        self.http = _client("coci", settings, **kwargs)

    def citations(self, cited: Doi) -> list[CitationEdge]:
        resp = self.http.get(f"citations/{quote(cited, safe='/')}")
        if resp.status == 404:
            return []
        try:
            rows = resp.json()
        except json.JSONDecodeError as exc:
            raise EndpointError(resp.status, resp.url) from exc
        edges: list[CitationEdge] = []
        seen: set[Doi] = set()
        for row in rows or []:
            citing = _first_doi(str(row.get("citing", "")).replace("coci =>", " "))
            if citing is None or citing in seen:
                continue
            seen.add(citing)
            edges.append(CitationEdge(citing, cited, row.get("creation") or None))
        return edges

    def citation_counts(self, dois) -> dict[Doi, int]:
        return {doi: len(self.citations(doi)) for doi in dois}
