"""Sliding time-window citation z-scores.

A paper's score standardizes its citation count against the cohort of
papers from the same corpus submitted within ``half_width_days`` of it:
subtract the cohort mean, divide by the cohort standard deviation. Papers
without citation data never enter a cohort; papers below the minimum
citation count keep contributing to cohorts but receive no score of their
own. Cohorts whose standard deviation is zero make the score undefined, so
their anchor papers are excluded with an explicit reason instead of being
emitted with an infinite or silently-zero score.

Window statistics use exact summation (``math.fsum``) so results are
independent of iteration order.
"""

from __future__ import annotations

import enum
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from math import fsum, sqrt
from typing import Iterable, Sequence

from .corpus import Corpus, PaperRecord


class StdMode(enum.Enum):
    """Population (divide by N) or sample (divide by N-1) standard deviation."""

    POPULATION = "population"
    SAMPLE = "sample"


@dataclass(frozen=True, slots=True)
class ScoringConfig:
    half_width_days: int = 10
    min_citations: int = 4
    std_mode: StdMode = StdMode.POPULATION
    include_self: bool = True

    def __post_init__(self) -> None:
        if self.half_width_days < 0:
            raise ValueError("half_width_days must be >= 0")
        if self.min_citations < 0:
            raise ValueError("min_citations must be >= 0")


class ExclusionReason(enum.Enum):
    NO_CITATION_DATA = "no-citation-data"
    BELOW_MIN_CITATIONS = "below-min-citations"
    DEGENERATE_WINDOW = "degenerate-window"


@dataclass(frozen=True, slots=True)
class Exclusion:
    paper_id: str
    reason: ExclusionReason


# Every corpus paper lands in exactly one of: scored output, exclusion report.
ExclusionReport = list[Exclusion]


@dataclass(frozen=True, slots=True)
class ScoredPaper:
    """A paper's z-score together with the window statistics behind it.

    ``window_count`` counts every citation-bearing paper in the window,
    including those that are themselves filtered out of the ranking by the
    minimum-citation rule.
    """

    paper_id: str
    z_score: float
    window_count: int
    window_mean: float
    window_std: float
    citation_count: int

    def __post_init__(self) -> None:
        if self.window_count < 1:
            raise ValueError("window_count must be positive")
        if not self.window_std > 0:
            raise ValueError("window_std must be positive")
        if self.citation_count < 0:
            raise ValueError("citation_count must be non-negative")


def _window_stats(
    counts: Sequence[float], std_mode: StdMode, skip: int | None = None
) -> tuple[float, float, int] | None:
    """Mean, std and size of a window, or None when the window is degenerate.

    ``skip`` drops one index (the anchor, when it does not belong to its own
    cohort). Two-pass computation with exact sums: permutation invariant, and
    a window of identical counts yields exactly zero variance.
    """
    kept = counts if skip is None else [c for i, c in enumerate(counts) if i != skip]
    n = len(kept)
    if n < 1:
        return None
    if std_mode is StdMode.SAMPLE and n < 2:
        return None
    # All-identical counts have zero deviation by definition; deciding this
    # before any arithmetic keeps real-valued windows from turning rounding
    # residue into astronomically large scores.
    if min(kept) == max(kept):
        return None
    mean = fsum(kept) / n
    ssd = fsum((c - mean) ** 2 for c in kept)
    denom = n if std_mode is StdMode.POPULATION else n - 1
    std = sqrt(ssd / denom)
    if std == 0.0:
        return None
    return mean, std, n


def z_score(
    anchor_count: float, window_counts: Iterable[float], config: ScoringConfig
) -> float | None:
    """Standard score of ``anchor_count`` within its window.

    Returns None for degenerate windows (zero deviation, or a sample-mode
    window of fewer than two counts). Counts may be real-valued; the
    minimum-citation eligibility filter lives outside this function.
    """
    counts = [float(c) for c in window_counts]
    if not counts:
        raise ValueError("window_counts must be non-empty")
    stats = _window_stats(counts, config.std_mode)
    if stats is None:
        return None
    mean, std, _ = stats
    return (anchor_count - mean) / std


def window_members(
    corpus: Corpus, anchor: PaperRecord, config: ScoringConfig
) -> set[PaperRecord]:
    """All citation-bearing corpus papers within the anchor's time window.

    Both window ends are inclusive. The anchor belongs to its own window
    only when ``config.include_self`` is set.
    """
    if anchor.paper_id not in corpus:
        raise ValueError(f"anchor {anchor.paper_id} is not in the corpus")
    members: set[PaperRecord] = set()
    for rec in corpus:
        if rec.citation_count is None:
            continue
        if abs((rec.submitted_date - anchor.submitted_date).days) > config.half_width_days:
            continue
        if rec.paper_id == anchor.paper_id and not config.include_self:
            continue
        members.add(rec)
    return members


def score_corpus(
    corpus: Corpus, config: ScoringConfig = ScoringConfig()
) -> tuple[list[ScoredPaper], ExclusionReport]:
    """Score every eligible paper against its own time window.

    Output is sorted by z-score descending, ties broken by paper id
    ascending. Every corpus paper appears exactly once across the scored
    list and the exclusion report.
    """
    cohort = [rec for rec in corpus if rec.citation_count is not None]
    if not cohort:
        raise ValueError("corpus has no citation-bearing papers to score")
    cohort.sort(key=lambda r: (r.submitted_date, r.paper_id))
    days = [rec.submitted_date.toordinal() for rec in cohort]
    counts = [float(rec.citation_count) for rec in cohort]
    position = {rec.paper_id: i for i, rec in enumerate(cohort)}

    scored: list[ScoredPaper] = []
    excluded: ExclusionReport = []
    for rec in corpus:
        if rec.citation_count is None:
            excluded.append(Exclusion(rec.paper_id, ExclusionReason.NO_CITATION_DATA))
            continue
        if rec.citation_count < config.min_citations:
            excluded.append(Exclusion(rec.paper_id, ExclusionReason.BELOW_MIN_CITATIONS))
            continue
        idx = position[rec.paper_id]
        lo = bisect_left(days, days[idx] - config.half_width_days)
        hi = bisect_right(days, days[idx] + config.half_width_days)
        window = counts[lo:hi]
        skip = None if config.include_self else idx - lo
        stats = _window_stats(window, config.std_mode, skip=skip)
        if stats is None:
            excluded.append(Exclusion(rec.paper_id, ExclusionReason.DEGENERATE_WINDOW))
            continue
        mean, std, size = stats
        scored.append(
            ScoredPaper(
                paper_id=rec.paper_id,
                z_score=(rec.citation_count - mean) / std,
                window_count=size,
                window_mean=mean,
                window_std=std,
                citation_count=rec.citation_count,
            )
        )
    scored.sort(key=lambda s: (-s.z_score, s.paper_id))
    return scored, excluded


def scored_to_obj(scored: ScoredPaper) -> dict:
    """Flat JSON-ready object for one scored paper; key order is fixed."""
    return {
        "id": scored.paper_id,
        "z_score": scored.z_score,
        "window_count": scored.window_count,
        "window_mean": scored.window_mean,
        "window_std": scored.window_std,
        "citations": scored.citation_count,
    }


def scored_from_obj(obj: object) -> ScoredPaper:
    """Inverse of :func:`scored_to_obj`; raises ValueError on bad input."""
    if not isinstance(obj, dict):
        raise ValueError("scored row is not a JSON object")
    try:
        return ScoredPaper(
            paper_id=str(obj["id"]),
            z_score=float(obj["z_score"]),
            window_count=int(obj["window_count"]),
            window_mean=float(obj["window_mean"]),
            window_std=float(obj["window_std"]),
            citation_count=int(obj["citations"]),
        )
    except KeyError as exc:
        raise ValueError(f"scored row missing key {exc.args[0]!r}") from None
