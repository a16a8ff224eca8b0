"""Research-trend detection for scholarly corpora.

Ranks papers by citation counts normalized against a sliding submission-date
window (time-window z-scores), then aggregates human category annotations
over the top of the ranking into importance statistics and distribution
reports. Ships a replayable harvesting layer so the full pipeline runs
offline and deterministically.
"""

from .analytics import (
    CategoryStats,
    DistributionRow,
    StatKey,
    category_stats,
    distribution,
    rank_by,
)
from .annotate import (
    Annotation,
    AnnotationIssue,
    Aspect,
    LabelScheme,
    NotEnumeratedError,
    builtin_scheme,
    join,
    load_annotations,
)
from .corpus import (
    Corpus,
    Field,
    LoadIssue,
    PaperRecord,
    load_corpus,
    save_corpus,
)
from .errors import CacheError, CiteTrendsError, DataFormatError, TransportError
from .harvest import (
    CitationSnapshot,
    HarvestConfig,
    Mode,
    RateLimiter,
    attach_citations,
    fetch_citations,
    harvest_metadata,
)
from .ranking import RankingConfig, top_k
from .report import TableFormat, render_bar_chart, render_table
from .scoring import (
    Exclusion,
    ExclusionReason,
    ScoredPaper,
    ScoringConfig,
    StdMode,
    score_corpus,
    window_members,
    z_score,
)

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "AnnotationIssue",
    "Aspect",
    "CacheError",
    "CategoryStats",
    "CitationSnapshot",
    "CiteTrendsError",
    "Corpus",
    "DataFormatError",
    "DistributionRow",
    "Exclusion",
    "ExclusionReason",
    "Field",
    "HarvestConfig",
    "LabelScheme",
    "LoadIssue",
    "Mode",
    "NotEnumeratedError",
    "PaperRecord",
    "RankingConfig",
    "RateLimiter",
    "ScoredPaper",
    "ScoringConfig",
    "StatKey",
    "StdMode",
    "TableFormat",
    "TransportError",
    "attach_citations",
    "builtin_scheme",
    "category_stats",
    "distribution",
    "fetch_citations",
    "harvest_metadata",
    "join",
    "load_annotations",
    "load_corpus",
    "rank_by",
    "render_bar_chart",
    "render_table",
    "save_corpus",
    "score_corpus",
    "top_k",
    "window_members",
    "z_score",
]
