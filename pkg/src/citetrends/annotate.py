"""Label schemes for the three annotation aspects and annotation import.

Each (field, aspect) pair has a closed label set. Two of the six built-in
sets are fully enumerated below; the other four are only known by their
documented cardinality, so requesting them without a user-supplied scheme
file raises :class:`NotEnumeratedError`.

Annotation files are UTF-8 CSV with header ``paper_id,task,method,goal``;
an empty cell means the aspect could not be annotated from the abstract.
Scheme files carry one label per line, ``#`` comments allowed.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .corpus import Field
from .errors import DataFormatError
from .scoring import ScoredPaper


class Aspect(enum.Enum):
    TASK = "task"
    METHOD = "method"
    GOAL = "goal"


class NotEnumeratedError(DataFormatError):
    """Requested a built-in scheme whose labels are not fully enumerated."""


class AnnotationFormatError(DataFormatError):
    """The annotation file is structurally unusable (e.g. no paper_id column)."""


@dataclass(frozen=True)
class LabelScheme:
    """The closed set of allowed labels for one (field, aspect) pair."""

    field: Field
    aspect: Aspect
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("label set must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("label set must not contain duplicates")

    def __contains__(self, label: str) -> bool:
        return label in self.labels


@dataclass(frozen=True, slots=True)
class Annotation:
    """One paper's aspect labels; None means not annotatable from the abstract."""

    paper_id: str
    task: str | None = None
    method: str | None = None
    goal: str | None = None

    def label_for(self, aspect: Aspect) -> str | None:
        return getattr(self, aspect.value)


_CSCL_TASK_LABELS = (
    "Generation",
    "Machine Translation (MT)",
    "Text representations",
    "Speech",
    "Language Modeling",
    "Sentence Classification",
    "Style Transfer",
    "Reasoning",
    "Relation extraction",
    "Sequence Tagging",
    "Emotion Detection",
    "Argument Mining",
    "Human-Computer Interaction",
    "Parsing",
    "Rest",
)

# The published scheme counts 15 method labels but prints only 14;
# "Unlisted" stands in for the one that was never spelled out.
_CSLG_METHOD_LABELS = (
    "Reinforcement Learning (RL)",
    "Other Deep Learning architect.",
    "Representation Learning",
    "GAN",
    "Generation",
    "Architecture Search",
    "Distillation",
    "Analysis",
    "Interpretability",
    "Learning Aspects",
    "Various",
    "Data",
    "Rest",
    "Adversarial",
    "Unlisted",
)

_BUILTIN_LABELS: dict[tuple[Field, Aspect], tuple[str, ...]] = {
    (Field.CS_CL, Aspect.TASK): _CSCL_TASK_LABELS,
    (Field.CS_LG, Aspect.METHOD): _CSLG_METHOD_LABELS,
}

# Cardinalities of all six built-in schemes, enumerated or not.
DOCUMENTED_LABEL_COUNTS: dict[tuple[Field, Aspect], int] = {
    (Field.CS_CL, Aspect.TASK): 15,
    (Field.CS_CL, Aspect.METHOD): 28,
    (Field.CS_CL, Aspect.GOAL): 7,
    (Field.CS_LG, Aspect.TASK): 13,
    (Field.CS_LG, Aspect.METHOD): 15,
    (Field.CS_LG, Aspect.GOAL): 13,
}

# Abbreviations seen in the wild mapped to their canonical labels.
# Aliases are data: they only apply when the target is in the scheme.
DEFAULT_LABEL_ALIASES: dict[str, str] = {
    "Emotion Det.": "Emotion Detection",
    "Text repr.": "Text representations",
    "MT": "Machine Translation (MT)",
    "RL": "Reinforcement Learning (RL)",
    "HCI": "Human-Computer Interaction",
    "Other DL architect.": "Other Deep Learning architect.",
}


def load_scheme_file(path: str | Path, field: Field, aspect: Aspect) -> LabelScheme:
    """Read a scheme file: one label per line, blank lines and # comments skipped."""
    labels: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            label = line.strip()
            if not label or label.startswith("#"):
                continue
            labels.append(label)
    if not labels:
        raise DataFormatError(f"scheme file {path} contains no labels")
    return LabelScheme(field=field, aspect=aspect, labels=tuple(labels))


def builtin_scheme(
    field: Field, aspect: Aspect, scheme_file: str | Path | None = None
) -> LabelScheme:
    """Scheme for a (field, aspect) pair.

    A user-supplied ``scheme_file`` always wins; otherwise the built-in
    enumeration is returned when one exists, and NotEnumeratedError is
    raised when only the label count is documented.
    """
    if scheme_file is not None:
        return load_scheme_file(scheme_file, field, aspect)
    labels = _BUILTIN_LABELS.get((field, aspect))
    if labels is None:
        raise NotEnumeratedError(
            f"no built-in label list for ({field.value}, {aspect.value}); "
            f"only its size ({DOCUMENTED_LABEL_COUNTS[(field, aspect)]}) is documented. "
            "Supply a scheme file."
        )
    return LabelScheme(field=field, aspect=aspect, labels=labels)


class IssueKind(enum.Enum):
    MISSING_ID = "missing-id"
    UNKNOWN_LABEL = "unknown-label"
    DUPLICATE_ID = "duplicate-id"
    NO_SCHEME = "no-scheme"


@dataclass(frozen=True, slots=True)
class AnnotationIssue:
    line_no: int
    kind: IssueKind
    detail: str


def _resolve_label(
    raw: str, scheme: LabelScheme, aliases: Mapping[str, str]
) -> str | None:
    """Canonical label for a raw cell, or None when it is not in the scheme."""
    if raw in scheme:
        return raw
    canonical = aliases.get(raw)
    if canonical is not None and canonical in scheme:
        return canonical
    return None


def read_annotations(
    stream: IO[str],
    schemes: Mapping[Aspect, LabelScheme],
    *,
    aliases: Mapping[str, str] | None = None,
) -> tuple[list[Annotation], list[AnnotationIssue]]:
    """Read and validate an annotation CSV from an open stream.

    Rows with unknown labels are rejected whole; labels for aspects without
    a scheme are dropped from the row and reported, since they cannot be
    validated. Later duplicates of a paper_id are rejected.
    """
    aliases = DEFAULT_LABEL_ALIASES if aliases is None else aliases
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or "paper_id" not in reader.fieldnames:
        raise AnnotationFormatError("annotation file has no paper_id column")

    accepted: list[Annotation] = []
    issues: list[AnnotationIssue] = []
    seen: set[str] = set()
    for row in reader:
        line_no = reader.line_num
        paper_id = (row.get("paper_id") or "").strip()
        if not paper_id:
            issues.append(AnnotationIssue(line_no, IssueKind.MISSING_ID, "empty paper_id"))
            continue
        if paper_id in seen:
            issues.append(
                AnnotationIssue(line_no, IssueKind.DUPLICATE_ID, f"duplicate paper_id {paper_id}")
            )
            continue

        labels: dict[str, str | None] = {}
        rejected = False
        for aspect in Aspect:
            raw = (row.get(aspect.value) or "").strip()
            if not raw:
                labels[aspect.value] = None
                continue
            scheme = schemes.get(aspect)
            if scheme is None:
                labels[aspect.value] = None
                issues.append(
                    AnnotationIssue(
                        line_no,
                        IssueKind.NO_SCHEME,
                        f"{paper_id}: no scheme to validate {aspect.value} label {raw!r}; dropped",
                    )
                )
                continue
            canonical = _resolve_label(raw, scheme, aliases)
            if canonical is None:
                issues.append(
                    AnnotationIssue(
                        line_no,
                        IssueKind.UNKNOWN_LABEL,
                        f"{paper_id}: unknown {aspect.value} label {raw!r}",
                    )
                )
                rejected = True
                break
            labels[aspect.value] = canonical
        if rejected:
            continue
        seen.add(paper_id)
        accepted.append(Annotation(paper_id=paper_id, **labels))
    return accepted, issues


def load_annotations(
    path: str | Path,
    schemes: Mapping[Aspect, LabelScheme],
    *,
    aliases: Mapping[str, str] | None = None,
) -> tuple[list[Annotation], list[AnnotationIssue]]:
    """Load an annotation CSV file. See :func:`read_annotations`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return read_annotations(fh, schemes, aliases=aliases)


def join(
    ranked: Sequence[ScoredPaper], annotations: Iterable[Annotation]
) -> tuple[list[tuple[ScoredPaper, Annotation]], list[str]]:
    """Inner-join ranked papers with annotations on paper_id.

    Returns the pairs in ranked order plus the ids of ranked papers that
    have no annotation (the coverage report).
    """
    by_id = {ann.paper_id: ann for ann in annotations}
    pairs: list[tuple[ScoredPaper, Annotation]] = []
    uncovered: list[str] = []
    for scored in ranked:
        ann = by_id.get(scored.paper_id)
        if ann is None:
            uncovered.append(scored.paper_id)
        else:
            pairs.append((scored, ann))
    return pairs, uncovered
