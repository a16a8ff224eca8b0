from datetime import date, timedelta
from pathlib import Path

import pytest

from citetrends.corpus import Corpus, Field, PaperRecord

FIXTURES = Path(__file__).parent / "fixtures"


def make_record(
    paper_id,
    *,
    day=0,
    citations=None,
    field=Field.CS_CL,
    base_date=date(2018, 1, 1),
    title="t",
    abstract="a",
    authors=("A. Author",),
):
    """One synthetic record, ``day`` days after ``base_date``."""
    return PaperRecord(
        paper_id=paper_id,
        title=title,
        abstract=abstract,
        authors=tuple(authors),
        field=field,
        submitted_date=base_date + timedelta(days=day),
        citation_count=citations,
        citation_asof=date(2018, 12, 31) if citations is not None else None,
    )


def make_corpus(spec, field=Field.CS_CL):
    """Corpus from an iterable of (paper_id, day_offset, citations|None)."""
    return Corpus.from_records(
        field,
        [make_record(pid, day=day, citations=c, field=field) for pid, day, c in spec],
    )


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def table1_corpus_path():
    return FIXTURES / "table1_corpus.jsonl"


@pytest.fixture
def table1_scored_path():
    return FIXTURES / "table1_scored.jsonl"


@pytest.fixture
def harvest_cache():
    return FIXTURES / "harvest_cache"


@pytest.fixture
def annotations_path():
    return FIXTURES / "annotations_cscl.csv"
