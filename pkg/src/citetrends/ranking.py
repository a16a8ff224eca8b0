"""Top-K extraction from scored output."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .scoring import ScoredPaper


@dataclass(frozen=True, slots=True)
class RankingConfig:
    k: int = 100

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")


def require_ranked_order(scored: Sequence[ScoredPaper]) -> None:
    """Reject input that is not sorted by z-score desc, paper id asc."""
    for prev, cur in zip(scored, scored[1:]):
        if (-prev.z_score, prev.paper_id) > (-cur.z_score, cur.paper_id):
            raise ValueError(
                f"scored list is not ranked: {prev.paper_id!r} precedes {cur.paper_id!r}"
            )


def top_k(scored: Sequence[ScoredPaper], config: RankingConfig = RankingConfig()) -> list[ScoredPaper]:
    """First ``min(k, len(scored))`` entries of an already-ranked list.

    Ties crossing the K boundary are cut by the upstream deterministic
    tie-break; the list is never expanded beyond K.
    """
    require_ranked_order(scored)
    return list(scored[: config.k])
