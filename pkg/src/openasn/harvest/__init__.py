"""Polite clients for the open bibliographic endpoints."""

from __future__ import annotations

from dataclasses import dataclass

from .clients import (
    ACCEPT_SCORE,
    DEFAULT_BASE_URLS,
    CociClient,
    CrossrefClient,
    DblpClient,
    DoiProxyClient,
    NotFound,
    PersonMatch,
    Resolution,
    ResolutionStatus,
    UnknownPerson,
    WorkMetadata,
    name_match_score,
)
from .http import (
    CachedResponse,
    ConfigurationError,
    EndpointError,
    HarvestSettings,
    HttpClient,
    NetworkError,
    RateLimiter,
    ResponseCache,
)

__all__ = [
    "ACCEPT_SCORE",
    "DEFAULT_BASE_URLS",
    "CachedResponse",
    "CociClient",
    "ConfigurationError",
    "CrossrefClient",
    "DblpClient",
    "DoiProxyClient",
    "EndpointError",
    "HarvestSettings",
    "Harvester",
    "HttpClient",
    "NetworkError",
    "NotFound",
    "PersonMatch",
    "RateLimiter",
    "Resolution",
    "ResolutionStatus",
    "ResponseCache",
    "UnknownPerson",
    "WorkMetadata",
    "name_match_score",
]


@dataclass
class Harvester:
    dblp: DblpClient
    crossref: CrossrefClient
    doi: DoiProxyClient
    coci: CociClient

    @classmethod
    def from_settings(cls, settings: HarvestSettings) -> Harvester:
        return cls(
            DblpClient(settings),
            CrossrefClient(settings),
            DoiProxyClient(settings),
            CociClient(settings),
        )

    def stats(self) -> dict[str, dict[str, int]]:
        return {
            client.http.name: dict(sorted(client.http.stats.items()))
            for client in (self.dblp, self.crossref, self.doi, self.coci)
        }
