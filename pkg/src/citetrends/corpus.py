"""Canonical paper records and the line-delimited corpus store.

A corpus file holds one research field's crawl output: UTF-8, one JSON
object per line with keys ``id``, ``title``, ``abstract``, ``authors``,
``field``, ``submitted`` and, when a citation snapshot is attached,
``citations`` and ``citations_asof``. Unknown keys are ignored on read
and never written.

Versioned identifiers such as ``1810.04805v2`` normalize to their base id;
when a file carries several versions of the same paper, the highest version
wins and the losers are reported as skipped. Corpora are immutable after
load and safe to share across threads.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from types import MappingProxyType
from typing import IO, Iterable, Iterator, Mapping

from .errors import DataFormatError

# No submission in scope can predate the first preprint servers.
EARLIEST_SUBMISSION = date(1991, 1, 1)

_VERSION_RE = re.compile(r"^(?P<base>.+?)(?:v(?P<version>\d+))?$")


class Field(enum.Enum):
    """Research field a corpus is drawn from."""

    CS_CL = "cs.CL"
    CS_LG = "cs.LG"


class SkipReason(enum.Enum):
    MALFORMED_JSON = "malformed-json"
    MISSING_KEY = "missing-key"
    INVALID_VALUE = "invalid-value"
    INVALID_DATE = "invalid-date"
    DATE_OUT_OF_RANGE = "date-out-of-range"
    SUPERSEDED = "superseded"


@dataclass(frozen=True, slots=True)
class LoadIssue:
    """One skipped input line and why it was skipped."""

    line_no: int
    reason: SkipReason
    detail: str


class FieldMismatchError(DataFormatError):
    """A record's field disagrees with the corpus field (fatal on load)."""


class RecordParseError(DataFormatError):
    """A single record object could not be turned into a PaperRecord."""

    def __init__(self, reason: SkipReason, detail: str):
        super().__init__(detail)
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True, slots=True)
class PaperRecord:
    """One paper's metadata plus an optional citation snapshot.

    ``citation_count`` and ``citation_asof`` travel together: either both
    are set (the count was harvested on ``citation_asof``) or both are None.
    Author names are stored verbatim; nothing downstream keys on them.
    """

    paper_id: str
    title: str
    abstract: str
    authors: tuple[str, ...]
    field: Field
    submitted_date: date
    citation_count: int | None = None
    citation_asof: date | None = None

    def __post_init__(self) -> None:
        if not self.paper_id:
            raise ValueError("paper_id must be non-empty")
        object.__setattr__(self, "authors", tuple(self.authors))
        if (self.citation_count is None) != (self.citation_asof is None):
            raise ValueError("citation_count and citation_asof must be set together")
        if self.citation_count is not None and self.citation_count < 0:
            raise ValueError("citation_count must be non-negative")

    @property
    def has_citations(self) -> bool:
        return self.citation_count is not None


@dataclass(frozen=True)
class Corpus:
    """All records of one field, keyed by paper id in sorted-id order.

    Build instances through :meth:`from_records`, which enforces the
    single-field and unique-id invariants.
    """

    field: Field
    records: Mapping[str, PaperRecord]

    @classmethod
    def from_records(cls, field: Field, records: Iterable[PaperRecord]) -> "Corpus":
        by_id: dict[str, PaperRecord] = {}
        for rec in records:
            if rec.field is not field:
                raise FieldMismatchError(
                    f"record {rec.paper_id} has field {rec.field.value}, "
                    f"corpus field is {field.value}"
                )
            if rec.paper_id in by_id:
                raise DataFormatError(f"duplicate paper_id {rec.paper_id}")
            by_id[rec.paper_id] = rec
        ordered = {pid: by_id[pid] for pid in sorted(by_id)}
        return cls(field=field, records=MappingProxyType(ordered))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PaperRecord]:
        return iter(self.records.values())

    def __contains__(self, paper_id: str) -> bool:
        return paper_id in self.records

    def get(self, paper_id: str) -> PaperRecord | None:
        return self.records.get(paper_id)


def split_version(paper_id: str) -> tuple[str, int]:
    """Split a possibly versioned id into (base id, version).

    An id without a version suffix gets version 0, so any explicit
    version outranks it.
    """
    m = _VERSION_RE.match(paper_id)
    if m is None or not m.group("base"):
        return paper_id, 0
    version = m.group("version")
    return m.group("base"), int(version) if version else 0


def record_to_obj(rec: PaperRecord) -> dict:
    """Flat JSON-ready object for one record; key order is fixed."""
    obj = {
        "id": rec.paper_id,
        "title": rec.title,
        "abstract": rec.abstract,
        "authors": list(rec.authors),
        "field": rec.field.value,
        "submitted": rec.submitted_date.isoformat(),
    }
    if rec.citation_count is not None and rec.citation_asof is not None:
        obj["citations"] = rec.citation_count
        obj["citations_asof"] = rec.citation_asof.isoformat()
    return obj


def _parse_date(raw: object, key: str) -> date:
    if not isinstance(raw, str):
        raise RecordParseError(SkipReason.INVALID_DATE, f"{key} is not a string")
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise RecordParseError(SkipReason.INVALID_DATE, f"{key} {raw!r} is not a valid date") from None


def record_from_obj(
    obj: object,
    *,
    earliest: date = EARLIEST_SUBMISSION,
    latest: date | None = None,
) -> tuple[PaperRecord, int]:
    """Validate one parsed JSON object into a record.

    Returns the record (paper_id normalized to the base id) and the version
    carried by the raw id. ``latest`` defaults to today: future-dated
    submissions are crawl noise.
    """
    if latest is None:
        latest = date.today()
    if not isinstance(obj, dict):
        raise RecordParseError(SkipReason.MALFORMED_JSON, "line is not a JSON object")
    for key in ("id", "title", "abstract", "authors", "field", "submitted"):
        if key not in obj:
            raise RecordParseError(SkipReason.MISSING_KEY, f"missing key {key!r}")
    raw_id = obj["id"]
    if not isinstance(raw_id, str) or not raw_id:
        raise RecordParseError(SkipReason.INVALID_VALUE, "id must be a non-empty string")
    if not isinstance(obj["title"], str) or not isinstance(obj["abstract"], str):
        raise RecordParseError(SkipReason.INVALID_VALUE, "title/abstract must be strings")
    authors = obj["authors"]
    if not isinstance(authors, list) or not all(isinstance(a, str) for a in authors):
        raise RecordParseError(SkipReason.INVALID_VALUE, "authors must be a list of strings")
    try:
        fld = Field(obj["field"])
    except ValueError:
        raise RecordParseError(
            SkipReason.INVALID_VALUE, f"unknown field {obj['field']!r}"
        ) from None
    submitted = _parse_date(obj["submitted"], "submitted")
    if not earliest <= submitted <= latest:
        raise RecordParseError(
            SkipReason.DATE_OUT_OF_RANGE,
            f"submitted {submitted.isoformat()} outside [{earliest.isoformat()}, {latest.isoformat()}]",
        )

    citations = obj.get("citations")
    asof_raw = obj.get("citations_asof")
    if (citations is None) != (asof_raw is None):
        raise RecordParseError(
            SkipReason.INVALID_VALUE, "citations and citations_asof must appear together"
        )
    asof = None
    if citations is not None:
        if not isinstance(citations, int) or isinstance(citations, bool) or citations < 0:
            raise RecordParseError(
                SkipReason.INVALID_VALUE, "citations must be a non-negative integer"
            )
        asof = _parse_date(asof_raw, "citations_asof")

    base_id, version = split_version(raw_id)
    record = PaperRecord(
        paper_id=base_id,
        title=obj["title"],
        abstract=obj["abstract"],
        authors=tuple(authors),
        field=fld,
        submitted_date=submitted,
        citation_count=citations,
        citation_asof=asof,
    )
    return record, version


class RecordAccumulator:
    """Collects parsed records, deduplicating versioned ids.

    The highest version wins; between equal versions the record with the
    lexicographically greatest canonical serialization wins, so the result
    is independent of input order. Displaced records are handed back so
    callers can report them.
    """

    def __init__(self, field: Field | None = None):
        self.field = field
        self._kept: dict[str, tuple[int, str, PaperRecord]] = {}

    def add(self, rec: PaperRecord, version: int) -> tuple[bool, str | None]:
        """Insert one record.

        Returns (accepted, detail): accepted tells whether ``rec`` is now the
        kept record for its id; detail describes the displaced record when a
        dedup happened, else None.
        """
        if self.field is None:
            self.field = rec.field
        elif rec.field is not self.field:
            raise FieldMismatchError(
                f"record {rec.paper_id} has field {rec.field.value}, "
                f"expected {self.field.value}"
            )
        canon = json.dumps(record_to_obj(rec), sort_keys=True)
        existing = self._kept.get(rec.paper_id)
        if existing is None:
            self._kept[rec.paper_id] = (version, canon, rec)
            return True, None
        if (version, canon) > existing[:2]:
            self._kept[rec.paper_id] = (version, canon, rec)
            return True, f"{rec.paper_id}: superseded by version {version}"
        return False, f"{rec.paper_id}: superseded by version {existing[0]}"

    def corpus(self) -> Corpus:
        if self.field is None:
            raise DataFormatError("cannot infer corpus field from zero records")
        return Corpus.from_records(self.field, (rec for _, _, rec in self._kept.values()))


def read_corpus(
    stream: IO[str],
    *,
    field: Field | None = None,
    earliest: date = EARLIEST_SUBMISSION,
    latest: date | None = None,
) -> tuple[Corpus, list[LoadIssue]]:
    """Read a line-delimited corpus from an open text stream.

    Malformed lines are skipped and reported, never fatal; a mix of fields
    in one file is fatal. Blank lines are ignored.
    """
    acc = RecordAccumulator(field)
    issues: list[LoadIssue] = []
    line_of: dict[str, int] = {}  # paper_id -> line of currently kept record
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            issues.append(LoadIssue(line_no, SkipReason.MALFORMED_JSON, str(exc)))
            continue
        try:
            rec, version = record_from_obj(obj, earliest=earliest, latest=latest)
        except RecordParseError as exc:
            issues.append(LoadIssue(line_no, exc.reason, exc.detail))
            continue
        accepted, detail = acc.add(rec, version)
        if accepted:
            if detail is not None:
                issues.append(LoadIssue(line_of[rec.paper_id], SkipReason.SUPERSEDED, detail))
            line_of[rec.paper_id] = line_no
        else:
            issues.append(LoadIssue(line_no, SkipReason.SUPERSEDED, detail or ""))
    if acc.field is None:
        raise DataFormatError("corpus file contains no valid records and no field was given")
    return acc.corpus(), issues


def load_corpus(
    path: str | Path,
    *,
    field: Field | None = None,
    earliest: date = EARLIEST_SUBMISSION,
    latest: date | None = None,
) -> tuple[Corpus, list[LoadIssue]]:
    """Load and validate a corpus file. See :func:`read_corpus`."""
    with open(path, "r", encoding="utf-8") as fh:
        return read_corpus(fh, field=field, earliest=earliest, latest=latest)


def write_corpus(corpus: Corpus, stream: IO[str]) -> int:
    """Write records in paper-id order; returns the number written."""
    count = 0
    for rec in corpus:
        stream.write(json.dumps(record_to_obj(rec), ensure_ascii=False))
        stream.write("\n")
        count += 1
    return count


def save_corpus(corpus: Corpus, path: str | Path) -> int:
    """Save a corpus to ``path``; round-trips field-for-field via load."""
    with open(path, "w", encoding="utf-8") as fh:
        return write_corpus(corpus, fh)
