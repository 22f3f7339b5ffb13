"""Count provider backed by a Europe PMC style literature search API.

The service answers boolean phrase queries over its own article store, so
this backend delegates all counting to it: each pipeline count becomes a
search request asking for the hit total only, with no records returned.
Responses are cached on disk keyed by the exact query string, because
live corpora grow over time and a run should be reproducible afterwards.
"""

from __future__ import annotations

import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

import requests

from .index import DateRange
from .tokenizer import InvalidPhraseError

logger = logging.getLogger(__name__)

DEFAULT_ENDPOINT = "https://www.ebi.ac.uk/europepmc/webservices/rest/search"
DEFAULT_COUNT_FIELD = "hitCount"
# Ask for the hit total only: JSON body, no article records.
DEFAULT_COUNT_PARAMS: Mapping[str, str] = {
    "format": "json",
    "resultType": "lite",
    "pageSize": "0",
}

_ENV_PREFIX = "LITMINER_"


class TransportError(RuntimeError):
    """Request never produced a usable HTTP response."""

    def __init__(self, query_string: str, message: str):
        self.query_string = query_string
        super().__init__(f"{message} [query: {query_string}]")


class ProtocolError(RuntimeError):
    """The service answered, but not in the shape this client expects."""

    def __init__(self, query_string: str, message: str):
        self.query_string = query_string
        super().__init__(f"{message} [query: {query_string}]")


@dataclass(frozen=True)
class RemoteQuery:
    query_string: str
    endpoint_params: Mapping[str, str]


def format_date_clause(date_range: DateRange) -> str:
    return (
        f"(FIRST_PDATE:[{date_range.start.isoformat()}"
        f" TO {date_range.end.isoformat()}])"
    )


def build_query(
    *phrases: str,
    date_range: DateRange,
    count_params: Mapping[str, str] | None = None,
) -> RemoteQuery:
    """Compose the service's boolean query for the given phrases and range.

    Each phrase is wrapped in double quotes for exact matching and the
    clauses are joined with `` AND ``, the date clause last.  With no
    phrases the query counts every article in the range.
    """
    parts = []
    for phrase in phrases:
        if not phrase:
            raise InvalidPhraseError("empty phrase in remote query")
        if '"' in phrase:
            raise InvalidPhraseError(
                f"phrase {phrase!r} contains a double quote, which cannot be"
                " expressed in the query grammar"
            )
        parts.append(f'"{phrase}"')
    parts.append(format_date_clause(date_range))
    params = DEFAULT_COUNT_PARAMS if count_params is None else count_params
    return RemoteQuery(" AND ".join(parts), dict(params))


@dataclass(frozen=True)
class CountCacheEntry:
    query_string: str
    count: int
    fetched_at: str
    source: str


class CountCache:
    """Append-only JSON Lines store of count answers; later lines win.

    Each line is one object: {"query", "count", "fetched_at", "source"}.
    The file is an expendable cache: deleting it wholesale is always safe.
    Unreadable lines are skipped with a warning so a torn final write
    cannot brick the store.
    """

    def __init__(self, path: str | Path | None):
        self._path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._entries: dict[str, CountCacheEntry] = {}
        if self._path is not None and self._path.exists():
            self._load()

    def _load(self) -> None:
        with open(self._path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    entry = CountCacheEntry(
                        query_string=record["query"],
                        count=record["count"],
                        fetched_at=record["fetched_at"],
                        source=record.get("source", ""),
                    )
                    if not isinstance(entry.count, int) or entry.count < 0:
                        raise ValueError("bad count")
                except (ValueError, KeyError, TypeError):
                    logger.warning("%s: skipping unreadable cache line %d", self._path, line_no)
                    continue
                self._entries[entry.query_string] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, query_string: str) -> int | None:
        with self._lock:
            entry = self._entries.get(query_string)
        return entry.count if entry is not None else None

    def put(self, query_string: str, count: int, source: str) -> None:
        entry = CountCacheEntry(
            query_string=query_string,
            count=count,
            fetched_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            source=source,
        )
        line = json.dumps(
            {
                "query": entry.query_string,
                "count": entry.count,
                "fetched_at": entry.fetched_at,
                "source": entry.source,
            },
            ensure_ascii=False,
        )
        with self._lock:
            self._entries[entry.query_string] = entry
            if self._path is not None:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                # One whole line per write keeps concurrent appends intact.
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")


class RateLimiter:
    """Paces request starts and caps how many run at once."""

    def __init__(self, per_second: float, max_in_flight: int):
        if per_second <= 0:
            raise ValueError("per_second must be positive")
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self._interval = 1.0 / per_second
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._clock_lock = threading.Lock()
        self._next_start = 0.0

    def __enter__(self) -> "RateLimiter":
        self._slots.acquire()
        with self._clock_lock:
            now = time.monotonic()
            wait = self._next_start - now
            self._next_start = max(now, self._next_start) + self._interval
        if wait > 0:
            time.sleep(wait)
        return self

    def __exit__(self, *exc_info: Any) -> None:
        self._slots.release()


@dataclass(frozen=True)
class ClientConfig:
    """Remote backend settings; see README for the config file keys."""

    endpoint: str = DEFAULT_ENDPOINT
    count_field: str = DEFAULT_COUNT_FIELD
    count_params: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_COUNT_PARAMS))
    api_key: str | None = None
    api_key_param: str = "apiKey"
    requests_per_second: float = 5.0
    max_in_flight: int = 2
    max_attempts: int = 5
    backoff_base: float = 0.5
    backoff_cap: float = 30.0
    timeout: float = 30.0
    cache_path: str | None = None
    bypass_cache: bool = False
    source_label: str = "europepmc"

    _FILE_KEYS = (
        "endpoint",
        "count_field",
        "count_params",
        "api_key",
        "api_key_param",
        "requests_per_second",
        "max_in_flight",
        "max_attempts",
        "backoff_base",
        "backoff_cap",
        "timeout",
        "cache_path",
        "source_label",
    )

    @classmethod
    def from_file(cls, path: str | Path, base: "ClientConfig | None" = None) -> "ClientConfig":
        """Read a JSON config file on top of ``base`` (or the defaults)."""
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: client config must be a JSON object")
        unknown = sorted(set(data) - set(cls._FILE_KEYS))
        if unknown:
            raise ValueError(f"{path}: unknown client config keys: {unknown}")
        return replace(base or cls(), **data)

    def with_env_overrides(self, env: Mapping[str, str] | None = None) -> "ClientConfig":
        """Apply LITMINER_* environment variables on top of this config."""
        env = os.environ if env is None else env
        updates: dict[str, Any] = {}
        plain = {
            "ENDPOINT": "endpoint",
            "COUNT_FIELD": "count_field",
            "API_KEY": "api_key",
            "CACHE": "cache_path",
        }
        numeric = {
            "RATE_LIMIT": ("requests_per_second", float),
            "MAX_IN_FLIGHT": ("max_in_flight", int),
            "RETRY_ATTEMPTS": ("max_attempts", int),
            "TIMEOUT": ("timeout", float),
        }
        for suffix, attr in plain.items():
            value = env.get(_ENV_PREFIX + suffix)
            if value is not None:
                updates[attr] = value
        for suffix, (attr, cast) in numeric.items():
            value = env.get(_ENV_PREFIX + suffix)
            if value is not None:
                try:
                    updates[attr] = cast(value)
                except ValueError as exc:
                    raise ValueError(f"{_ENV_PREFIX}{suffix}={value!r}: {exc}") from exc
        return replace(self, **updates) if updates else self


class EpmcCountClient:
    """Issues count-only search requests with caching, pacing and retry."""

    def __init__(self, config: ClientConfig | None = None, session: Any = None):
        self.config = config or ClientConfig()
        self._session = session if session is not None else requests.Session()
        self.cache = CountCache(self.config.cache_path)
        self._limiter = RateLimiter(
            self.config.requests_per_second, self.config.max_in_flight
        )

    def fetch_count(self, query: RemoteQuery) -> int:
        """Hit count for ``query``, from cache when possible.

        Cache lookups are keyed by the exact query string.  With
        ``bypass_cache`` the service is always asked, and the fresh answer
        still refreshes the cache for later runs.
        """
        query_string = query.query_string
        if not self.config.bypass_cache:
            cached = self.cache.get(query_string)
            if cached is not None:
                return cached
        payload = self._request(query)
        count = self._extract_count(payload, query_string)
        self.cache.put(query_string, count, self.config.source_label)
        return count

    def _request(self, query: RemoteQuery) -> Any:
        params = {"query": query.query_string, **query.endpoint_params}
        if self.config.api_key:
            params[self.config.api_key_param] = self.config.api_key
        last_failure = "no attempts made"
        for attempt in range(self.config.max_attempts):
            if attempt:
                delay = min(
                    self.config.backoff_cap,
                    self.config.backoff_base * 2 ** (attempt - 1),
                )
                time.sleep(delay * random.uniform(0.5, 1.0))
            try:
                with self._limiter:
                    response = self._session.get(
                        self.config.endpoint, params=params, timeout=self.config.timeout
                    )
            except requests.RequestException as exc:
                last_failure = f"{type(exc).__name__}: {exc}"
                logger.warning("attempt %d failed (%s), retrying", attempt + 1, last_failure)
                continue
            status = response.status_code
            if status == 200:
                try:
                    return response.json()
                except ValueError as exc:
                    raise ProtocolError(
                        query.query_string, f"response body is not JSON: {exc}"
                    ) from exc
            if status == 429 or 500 <= status < 600:
                last_failure = f"HTTP {status}"
                logger.warning("attempt %d failed (%s), retrying", attempt + 1, last_failure)
                continue
            raise TransportError(query.query_string, f"HTTP {status}")
        raise TransportError(
            query.query_string,
            f"gave up after {self.config.max_attempts} attempts; last failure: {last_failure}",
        )

    def _extract_count(self, payload: Any, query_string: str) -> int:
        node = payload
        for part in self.config.count_field.split("."):
            if not isinstance(node, dict) or part not in node:
                raise ProtocolError(
                    query_string,
                    f"count field {self.config.count_field!r} missing from response",
                )
            node = node[part]
        if isinstance(node, str) and node.isdigit():
            node = int(node)
        if isinstance(node, bool) or not isinstance(node, int):
            raise ProtocolError(
                query_string, f"count field has non-integer value {node!r}"
            )
        if node < 0:
            raise ProtocolError(query_string, f"count field is negative: {node}")
        return node


class EpmcCountProvider:
    """Adapts :class:`EpmcCountClient` to the pipeline's count interface."""

    def __init__(self, client: EpmcCountClient):
        self._client = client

    def _fetch(self, *phrases: str, date_range: DateRange) -> int:
        query = build_query(
            *phrases, date_range=date_range, count_params=self._client.config.count_params
        )
        return self._client.fetch_count(query)

    def article_total(self, date_range: DateRange) -> int:
        return self._fetch(date_range=date_range)

    def count_with(self, phrase: str, date_range: DateRange) -> int:
        return self._fetch(phrase, date_range=date_range)

    def count_with_both(self, phrase_a: str, phrase_b: str, date_range: DateRange) -> int:
        return self._fetch(phrase_a, phrase_b, date_range=date_range)
