"""Category importance statistics and aspect distributions over ranked sets.

For each category C the three importance measures are: member count n,
summed z-score s, and mean z-score m = s / n. Pairs lacking the requested
aspect label are excluded from that aspect's statistics and counted
separately: "Rest" is a real label and must never be conflated with
missing data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import fsum
from typing import Sequence

from .annotate import Annotation, Aspect
from .scoring import ScoredPaper

Pair = tuple[ScoredPaper, Annotation]


@dataclass(frozen=True, slots=True)
class CategoryStats:
    label: str
    n: int
    s: float
    m: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("empty categories are never emitted")


@dataclass(frozen=True, slots=True)
class DistributionRow:
    label: str
    count: int
    percentage: float


class StatKey(enum.Enum):
    N = "n"
    S = "s"
    M = "m"


def category_stats(
    pairs: Sequence[Pair], aspect: Aspect
) -> tuple[list[CategoryStats], int]:
    """Group pairs by their aspect label and compute (n, s, m) per group.

    Returns the stats sorted by n descending (ties by label ascending) and
    the number of pairs lacking the aspect label. Sums use exact summation,
    so the output is independent of pair order.
    """
    groups: dict[str, list[float]] = {}
    missing = 0
    for scored, ann in pairs:
        label = ann.label_for(aspect)
        if label is None:
            missing += 1
            continue
        groups.setdefault(label, []).append(scored.z_score)
    stats = []
    for label, zs in groups.items():
        s = fsum(zs)
        stats.append(CategoryStats(label=label, n=len(zs), s=s, m=s / len(zs)))
    stats.sort(key=lambda cs: (-cs.n, cs.label))
    return stats, missing


def rank_by(stats: Sequence[CategoryStats], key: StatKey) -> list[str]:
    """Labels ordered descending by the chosen statistic, ties by label."""
    return [
        cs.label
        for cs in sorted(stats, key=lambda cs: (-getattr(cs, key.value), cs.label))
    ]


def distribution(
    pairs: Sequence[Pair], aspect: Aspect
) -> tuple[list[DistributionRow], int]:
    """Label counts and exact percentages over pairs carrying the aspect.

    Percentages are computed exactly and rounded only at presentation time;
    they sum to 100 whenever any pair carries the aspect. Returns the rows
    sorted by count descending (ties by label ascending) and the number of
    pairs lacking the aspect.
    """
    counts: dict[str, int] = {}
    missing = 0
    for _, ann in pairs:
        label = ann.label_for(aspect)
        if label is None:
            missing += 1
            continue
        counts[label] = counts.get(label, 0) + 1
    total = sum(counts.values())
    rows = [
        DistributionRow(label=label, count=count, percentage=100.0 * count / total)
        for label, count in counts.items()
    ]
    rows.sort(key=lambda r: (-r.count, r.label))
    return rows, missing
