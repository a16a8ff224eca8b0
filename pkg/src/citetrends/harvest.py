"""Metadata and citation harvesting with an offline replay mode.

Two clients live here. The metadata client walks a paged listing endpoint
that returns JSON pages shaped as::

    {"records": [<corpus record objects>], "resumption_token": "…" | null}

following resumption tokens until a page carries none. The citation client
does one lookup per paper and expects ``{"citations": <int>}`` bodies.

Every response is written to the cache before it is parsed, so a crashed
run never loses fetched pages: cached pages are reused on the next LIVE
run, and REPLAY mode reads exclusively from the cache, which makes the
whole pipeline testable offline and byte-for-byte deterministic.

Cache layout: ``<cache_dir>/metadata/page-<n>`` and
``<cache_dir>/citations/<quoted_paper_id>@<asof>``, raw response bytes.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import random
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Callable, Mapping

from .corpus import (
    Corpus,
    Field,
    RecordAccumulator,
    RecordParseError,
    record_from_obj,
)
from .errors import CacheError, TransportError

logger = logging.getLogger(__name__)

BACKOFF_BASE_SECONDS = 1.0
REQUEST_TIMEOUT_SECONDS = 30.0
CITATION_API_KEY_ENV = "CITATION_API_KEY"

Transport = Callable[[str], bytes]


class Mode(enum.Enum):
    LIVE = "live"
    REPLAY = "replay"


class LookupMiss(Exception):
    """The endpoint definitively has no data for this lookup (HTTP 404)."""


@dataclass(frozen=True, slots=True)
class HarvestConfig:
    date_from: date
    date_to: date
    field: Field
    cache_dir: Path
    metadata_endpoint: str = ""
    citation_endpoint: str = ""
    max_requests_per_second: float = 1.0
    max_retries: int = 3
    mode: Mode = Mode.REPLAY

    def __post_init__(self) -> None:
        if self.date_from > self.date_to:
            raise ValueError("date_from must not be after date_to")
        if not self.max_requests_per_second > 0:
            raise ValueError("max_requests_per_second must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        object.__setattr__(self, "cache_dir", Path(self.cache_dir))


@dataclass(frozen=True, slots=True)
class CitationSnapshot:
    """A paper's citation count as observed on ``asof``."""

    paper_id: str
    citation_count: int
    asof: date

    def __post_init__(self) -> None:
        if self.citation_count < 0:
            raise ValueError("citation_count must be non-negative")


class RateLimiter:
    """Spaces calls so at most ceil(rate) land in any sliding one-second window.

    Calls follow a fixed schedule anchored at the first call, computed as
    ``anchor + sent * interval`` so float error never accumulates; the
    interval carries a one-microsecond-per-call safety margin so rounding
    cannot squeeze an extra call into a window. An idle spell past the
    schedule re-anchors it, which also prevents post-idle bursts.
    Thread-safe; clock and sleep are injectable for simulated-time tests.
    """

    def __init__(
        self,
        rate_per_second: float,
        *,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if not rate_per_second > 0:
            raise ValueError("rate must be positive")
        self._interval = (1.0 + 1e-6) / rate_per_second
        self._clock = clock
        self._sleep = sleep
        self._anchor: float | None = None
        self._sent = 0
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            if self._anchor is None or now >= self._anchor + self._sent * self._interval:
                self._anchor = now
                self._sent = 1
                return
            self._sleep(self._anchor + self._sent * self._interval - now)
            self._sent += 1


def http_transport(url: str, *, headers: Mapping[str, str] | None = None) -> bytes:
    """Default HTTP GET: 404 raises LookupMiss, everything else TransportError."""
    request = urllib.request.Request(url, headers=dict(headers or {}))
    try:
        with urllib.request.urlopen(request, timeout=REQUEST_TIMEOUT_SECONDS) as resp:
            return resp.read()
    except urllib.error.HTTPError as exc:
        if exc.code == 404:
            raise LookupMiss(url) from exc
        raise TransportError(f"GET {url} failed: HTTP {exc.code}") from exc
    except OSError as exc:
        raise TransportError(f"GET {url} failed: {exc}") from exc


def _citation_transport() -> Transport:
    headers = {}
    api_key = os.environ.get(CITATION_API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    return lambda url: http_transport(url, headers=headers)


def _fetch_with_retries(
    transport: Transport,
    url: str,
    max_retries: int,
    *,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> bytes:
    """One logical GET with exponential backoff and jitter, base one second."""
    rng = rng if rng is not None else random
    for attempt in range(max_retries + 1):
        try:
            return transport(url)
        except LookupMiss:
            raise
        except TransportError:
            if attempt == max_retries:
                raise
            delay = BACKOFF_BASE_SECONDS * (2**attempt) * rng.uniform(0.5, 1.5)
            sleep(delay)
    raise AssertionError("unreachable")


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _page_url(config: HarvestConfig, token: str | None) -> str:
    params = {
        "field": config.field.value,
        "from": config.date_from.isoformat(),
        "until": config.date_to.isoformat(),
    }
    if token is not None:
        params["token"] = token
    return f"{config.metadata_endpoint}?{urllib.parse.urlencode(params)}"


def harvest_metadata(
    config: HarvestConfig,
    *,
    transport: Transport | None = None,
    limiter: RateLimiter | None = None,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> Corpus:
    """Fetch (or replay) the paged metadata listing into a validated corpus.

    Pages are cached before parsing; a LIVE run reuses any page already in
    the cache, which is what lets an interrupted harvest resume without
    refetching. Records outside [date_from, date_to] or of another field
    are filtered out; malformed records and pages are skipped and logged.
    """
    if config.mode is Mode.LIVE and not config.metadata_endpoint:
        raise ValueError("LIVE harvest requires a metadata endpoint")
    meta_dir = config.cache_dir / "metadata"
    if config.mode is Mode.REPLAY and not meta_dir.is_dir():
        raise CacheError(f"replay cache has no metadata directory: {meta_dir}")
    if config.mode is Mode.LIVE:
        meta_dir.mkdir(parents=True, exist_ok=True)
        if transport is None:
            transport = http_transport
        if limiter is None:
            limiter = RateLimiter(config.max_requests_per_second)

    acc = RecordAccumulator(config.field)
    latest_valid = min(config.date_to, date.today())
    token: str | None = None
    page_no = 0
    while True:
        page_path = meta_dir / f"page-{page_no}"
        if page_path.is_file():
            raw = page_path.read_bytes()
        elif config.mode is Mode.REPLAY:
            raise CacheError(f"replay cache is truncated: missing {page_path}")
        else:
            assert transport is not None and limiter is not None
            limiter.acquire()
            url = _page_url(config, token)
            try:
                raw = _fetch_with_retries(
                    transport, url, config.max_retries, sleep=sleep, rng=rng
                )
            except LookupMiss:
                raise TransportError(f"listing endpoint has no page at {url}") from None
            _atomic_write(page_path, raw)

        try:
            page = json.loads(raw)
            records = page["records"]
            if not isinstance(records, list):
                raise ValueError("records is not a list")
        except (ValueError, KeyError, TypeError) as exc:
            logger.warning("skipping malformed page %s: %s", page_path.name, exc)
            break
        for i, obj in enumerate(records):
            try:
                rec, version = record_from_obj(obj, latest=latest_valid)
            except RecordParseError as exc:
                logger.warning(
                    "skipping record %d of %s: %s", i, page_path.name, exc.detail
                )
                continue
            if rec.field is not config.field:
                continue
            if not config.date_from <= rec.submitted_date <= config.date_to:
                continue
            acc.add(rec, version)
        token = page.get("resumption_token")
        if token is None:
            break
        page_no += 1
    return acc.corpus()


def _cache_name(paper_id: str, asof: date) -> str:
    return f"{urllib.parse.quote(paper_id, safe='')}@{asof.isoformat()}"


def _scan_citation_cache(cit_dir: Path) -> dict[str, date]:
    """Latest cached asof date per paper id."""
    latest: dict[str, date] = {}
    for entry in cit_dir.iterdir():
        name = entry.name
        if "@" not in name or name.endswith(".tmp"):
            continue
        quoted_id, _, asof_raw = name.rpartition("@")
        try:
            asof = date.fromisoformat(asof_raw)
        except ValueError:
            continue
        paper_id = urllib.parse.unquote(quoted_id)
        if paper_id not in latest or asof > latest[paper_id]:
            latest[paper_id] = asof
    return latest


def fetch_citations(
    corpus: Corpus,
    config: HarvestConfig,
    *,
    transport: Transport | None = None,
    limiter: RateLimiter | None = None,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
    asof: date | None = None,
) -> tuple[dict[str, CitationSnapshot], list[str]]:
    """Look up a citation snapshot for every corpus paper.

    Returns the snapshot map plus the miss report: ids with no data (404 in
    LIVE mode, no cache entry in REPLAY mode, or an unparseable body).
    Lookups respect the shared rate limiter and are cached keyed by paper id
    and asof date, so repeated harvests build a citation time series.
    """
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    if config.mode is Mode.LIVE and not config.citation_endpoint:
        raise ValueError("LIVE citation fetch requires a citation endpoint")
    cit_dir = config.cache_dir / "citations"
    if config.mode is Mode.REPLAY:
        if not cit_dir.is_dir():
            raise CacheError(f"replay cache has no citations directory: {cit_dir}")
        cached_asof = _scan_citation_cache(cit_dir)
    else:
        cit_dir.mkdir(parents=True, exist_ok=True)
        if transport is None:
            transport = _citation_transport()
        if limiter is None:
            limiter = RateLimiter(config.max_requests_per_second)
        if asof is None:
            asof = date.today()

    snapshots: dict[str, CitationSnapshot] = {}
    misses: list[str] = []
    for rec in corpus:
        pid = rec.paper_id
        if config.mode is Mode.REPLAY:
            found = cached_asof.get(pid)
            if found is None:
                misses.append(pid)
                continue
            raw = (cit_dir / _cache_name(pid, found)).read_bytes()
            snapshot_asof = found
        else:
            assert transport is not None and limiter is not None and asof is not None
            path = cit_dir / _cache_name(pid, asof)
            if path.is_file():
                raw = path.read_bytes()
            else:
                limiter.acquire()
                url = f"{config.citation_endpoint.rstrip('/')}/{urllib.parse.quote(pid, safe='')}"
                try:
                    raw = _fetch_with_retries(
                        transport, url, config.max_retries, sleep=sleep, rng=rng
                    )
                except LookupMiss:
                    misses.append(pid)
                    continue
                _atomic_write(path, raw)
            snapshot_asof = asof

        try:
            body = json.loads(raw)
            count = body["citations"]
            if not isinstance(count, int) or isinstance(count, bool) or count < 0:
                raise ValueError("citations must be a non-negative integer")
        except (ValueError, KeyError, TypeError) as exc:
            logger.warning("unusable citation response for %s: %s", pid, exc)
            misses.append(pid)
            continue
        snapshots[pid] = CitationSnapshot(paper_id=pid, citation_count=count, asof=snapshot_asof)
    return snapshots, misses


def attach_citations(
    corpus: Corpus, snapshots: Mapping[str, CitationSnapshot]
) -> tuple[Corpus, list[str]]:
    """New corpus with snapshots merged onto matching records.

    Unmatched records keep their citation fields absent; snapshot ids that
    are not in the corpus are ignored and returned for reporting.
    """
    records = []
    for rec in corpus:
        snap = snapshots.get(rec.paper_id)
        if snap is None:
            records.append(rec)
        else:
            records.append(
                replace(rec, citation_count=snap.citation_count, citation_asof=snap.asof)
            )
    unknown = sorted(set(snapshots) - set(corpus.records))
    return Corpus.from_records(corpus.field, records), unknown
