"""Rate-limited, cached, retrying HTTP GET shared by the endpoint clients."""

from __future__ import annotations

import collections
import hashlib
import json
import logging
import os
import threading
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from urllib.parse import urlencode

import requests

from ..fsutil import atomic_write

__all__ = [
    "CachedResponse",
    "ConfigurationError",
    "EndpointError",
    "HarvestSettings",
    "HttpClient",
    "NetworkError",
    "RateLimiter",
    "ResponseCache",
]

logger = logging.getLogger(__name__)

TRANSIENT_STATUS = frozenset({429, 500, 502, 503, 504})
# 404 bodies are cached too: "does not exist" is an answer, not a failure.
CACHEABLE_STATUS = frozenset({200, 404})


class NetworkError(ConnectionError):
    """Transport failure that survived every retry."""


class EndpointError(RuntimeError):
    def __init__(self, status: int, url: str) -> None:
        super().__init__(f"HTTP {status} from {url}")
        self.status = status
        self.url = url


class ConfigurationError(ValueError):
    pass


@dataclass
class HarvestSettings:
    user_agent: str | None = None
    rate_limit: float = 2.0
    retries: int = 3
    backoff: float = 1.0
    timeout: float = 30.0
    max_in_flight: int = 4
    cache_root: Path | None = None
    offline: bool = False
    base_urls: dict[str, str] = field(default_factory=dict)


class RateLimiter:
    """Sliding-window limiter: at most ``limit`` dispatches in any 1 s window.

    ``clock`` and ``sleep`` are injectable so tests can drive a fake clock.
    """

    def __init__(
        self,
        limit: float,
        window: float = 1.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if limit <= 0:
            raise ValueError("rate limit must be positive")
        self.limit = max(1, int(limit))
        self.window = window if limit >= 1 else window / limit
        self._clock = clock
        self._sleep = sleep
        self._sent: collections.deque[float] = collections.deque()
        self._lock = threading.Lock()

    def acquire(self) -> float:
        """Block until a slot is free; return the dispatch timestamp."""
        with self._lock:
            while True:
                now = self._clock()
                while self._sent and self._sent[0] <= now - self.window:
                    self._sent.popleft()
                if len(self._sent) < self.limit:
                    self._sent.append(now)
                    return now
                # The floor keeps float rounding from stalling just short of the boundary.
                self._sleep(max(self._sent[0] + self.window - now, 1e-6))


@dataclass(frozen=True)
class CachedResponse:
    status: int
    body: bytes
    url: str
    from_cache: bool = False

    def json(self):
        return json.loads(self.body.decode("utf-8"))


class ResponseCache:
    """``<root>/<endpoint>/<sha256>.body`` plus a ``.meta.json`` sidecar."""

    def __init__(self, root: str | os.PathLike[str]) -> None:
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    @staticmethod
    def fingerprint(key: str) -> str:
        return hashlib.sha256(key.encode("utf-8")).hexdigest()

    def _paths(self, endpoint: str, key: str) -> tuple[Path, Path]:
        base = self.root / endpoint / self.fingerprint(key)
        return base.with_suffix(".body"), base.with_suffix(".meta.json")

    def _lock_for(self, endpoint: str, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(f"{endpoint}\0{key}", threading.Lock())

    def get(self, endpoint: str, key: str) -> tuple[int, bytes] | None:
        body_path, meta_path = self._paths(endpoint, key)
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            body = body_path.read_bytes()
        except (FileNotFoundError, json.JSONDecodeError):
            return None
        if meta.get("key") != key:
            return None
        return int(meta.get("status", 200)), body

    def put(self, endpoint: str, key: str, status: int, body: bytes) -> None:
        body_path, meta_path = self._paths(endpoint, key)
        meta = {
            "key": key,
            "status": status,
            "fetched_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        with self._lock_for(endpoint, key):
            # Body first: a reader only trusts the body once the sidecar exists.
            atomic_write(body_path, body)
            atomic_write(meta_path, json.dumps(meta, sort_keys=True))


class HttpClient:
    """GET-only client for one endpoint.

    Transport errors and 429/5xx responses are retried ``settings.retries``
    times with exponential backoff. 200 and 404 responses are cached.
    """

    def __init__(
        self,
        name: str,
        base_url: str,
        settings: HarvestSettings,
        session: requests.Session | None = None,
        limiter: RateLimiter | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.name = name
        self.base_url = base_url.rstrip("/")
        self.settings = settings
        self.session = session or requests.Session()
        self.limiter = limiter or RateLimiter(settings.rate_limit)
        self.cache = ResponseCache(settings.cache_root) if settings.cache_root else None
        self._sleep = sleep
        self._in_flight = threading.BoundedSemaphore(max(1, settings.max_in_flight))
        self.stats: collections.Counter[str] = collections.Counter()
        self._stats_lock = threading.Lock()

    def _count(self, what: str) -> None:
        with self._stats_lock:
            self.stats[what] += 1

    def request_key(self, path: str, params: Mapping[str, object] | None = None) -> str:
        query = urlencode(sorted((k, str(v)) for k, v in (params or {}).items()))
        return f"{self.name} {path}" + (f"?{query}" if query else "")

    def get(
        self,
        path: str,
        params: Mapping[str, object] | None = None,
        headers: Mapping[str, str] | None = None,
    ) -> CachedResponse:
        url = f"{self.base_url}/{path.lstrip('/')}"
        key = self.request_key(path, params)
        if self.cache is not None:
            hit = self.cache.get(self.name, key)
            if hit is not None:
                self._count("cache_hits")
                return CachedResponse(hit[0], hit[1], url, from_cache=True)

        if self.settings.offline:
            raise NetworkError(f"offline mode: {url} is not cached")
        if not self.settings.user_agent:
            raise ConfigurationError(
                "a user agent with a contact address must be configured before live requests"
            )

        send_headers = {"User-Agent": self.settings.user_agent, **(headers or {})}
        last_problem = ""
        status = None
        for attempt in range(self.settings.retries + 1):
            if attempt:
                self._sleep(self.settings.backoff * 2 ** (attempt - 1))
                self._count("retries")
            self.limiter.acquire()
            self._count("requests")
            try:
                with self._in_flight:
                    resp = self.session.get(
                        url, params=params, headers=send_headers, timeout=self.settings.timeout
                    )
            except requests.RequestException as exc:
                status = None
                last_problem = f"{type(exc).__name__}: {exc}"
                logger.debug("%s attempt %d failed: %s", url, attempt + 1, last_problem)
                continue
            status = resp.status_code
            if status in TRANSIENT_STATUS:
                last_problem = f"HTTP {status}"
                continue
            body = resp.content
            if status in CACHEABLE_STATUS:
                if self.cache is not None:
                    self.cache.put(self.name, key, status, body)
                return CachedResponse(status, body, url)
            self._count("failures")
            raise EndpointError(status, url)

        self._count("failures")
        if status is not None:
            raise EndpointError(status, url)
        raise NetworkError(f"{url}: {last_problem} after {self.settings.retries} retries")
