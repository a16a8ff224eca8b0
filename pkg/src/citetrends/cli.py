"""Command-line entry point wiring the pipeline stages together.

Every stage reads and writes the documented line-delimited formats, so
stages can be re-run independently and intermediate artifacts inspected:

    harvest … > corpus.jsonl
    citations corpus.jsonl --cache-dir … > with_citations.jsonl
    score with_citations.jsonl | rank --top 100 \
        | stats --annotations ann.csv --field cs.CL --aspect task --table distribution \
        | report --format svg > chart.svg

``pipeline`` chains the same stage implementations in-process and is
byte-for-byte equivalent to piping the stages by hand.

Exit codes: 0 success, 1 user error (bad flags or data), 2 environment
error (network, IO, missing caches). Diagnostics go to stderr; data goes
to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import sys
from datetime import date
from pathlib import Path
from typing import IO, BinaryIO, Iterable, TextIO

from . import analytics, annotate, corpus, harvest, ranking, report, scoring
from .errors import CacheError, DataFormatError, TransportError


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise _UsageError(self, message)


# --- small IO helpers --------------------------------------------------------


def _read_text(input_arg: str, stdin: BinaryIO) -> io.StringIO:
    if input_arg == "-":
        return io.StringIO(stdin.read().decode("utf-8"))
    return io.StringIO(Path(input_arg).read_text(encoding="utf-8"))


@contextlib.contextmanager
def _output(ns: argparse.Namespace, stdout: BinaryIO):
    if ns.out is None:
        yield stdout
    else:
        with open(ns.out, "wb") as fh:
            yield fh


def _write_jsonl(objs: Iterable[dict], out: BinaryIO) -> int:
    count = 0
    for obj in objs:
        out.write((json.dumps(obj, ensure_ascii=False) + "\n").encode("utf-8"))
        count += 1
    return count


def _write_corpus(c: corpus.Corpus, out: BinaryIO) -> int:
    buf = io.StringIO()
    count = corpus.write_corpus(c, buf)
    out.write(buf.getvalue().encode("utf-8"))
    return count


def _read_scored(stream: IO[str]) -> list[scoring.ScoredPaper]:
    scored = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            scored.append(scoring.scored_from_obj(json.loads(line)))
        except (json.JSONDecodeError, ValueError) as exc:
            raise DataFormatError(f"bad scored row on line {line_no}: {exc}") from None
    return scored


def _note(ns: argparse.Namespace, stderr: TextIO, message: str) -> None:
    if not ns.quiet:
        print(message, file=stderr)


# --- stage implementations (shared by the subcommands and `pipeline`) --------


def _harvest_config(
    ns: argparse.Namespace, field: corpus.Field, *, default_range: bool = False
) -> harvest.HarvestConfig:
    date_from, date_to = ns.date_from, ns.date_to
    if default_range:
        date_from = date_from or corpus.EARLIEST_SUBMISSION
        date_to = date_to or date.today()
    if date_from is None or date_to is None:
        raise DataFormatError("harvesting requires --from and --to")
    if ns.cache_dir is None:
        raise DataFormatError("harvesting requires --cache-dir")
    return harvest.HarvestConfig(
        date_from=date_from,
        date_to=date_to,
        field=field,
        cache_dir=Path(ns.cache_dir),
        metadata_endpoint=ns.metadata_endpoint,
        citation_endpoint=ns.citation_endpoint,
        max_requests_per_second=ns.rate,
        max_retries=ns.retries,
        mode=harvest.Mode.REPLAY if ns.replay else harvest.Mode.LIVE,
    )


def _harvest_corpus(ns: argparse.Namespace, stderr: TextIO) -> corpus.Corpus:
    config = _harvest_config(ns, corpus.Field(ns.field))
    harvested = harvest.harvest_metadata(config)
    _note(ns, stderr, f"harvested {len(harvested)} records")
    snapshots, misses = harvest.fetch_citations(harvested, config)
    merged, _ = harvest.attach_citations(harvested, snapshots)
    if misses:
        _note(ns, stderr, f"citation misses ({len(misses)}): {', '.join(misses)}")
    return merged


def _scoring_config(ns: argparse.Namespace) -> scoring.ScoringConfig:
    return scoring.ScoringConfig(
        half_width_days=ns.window_days,
        min_citations=ns.min_citations,
        std_mode=scoring.StdMode(ns.std),
        include_self=not ns.no_self,
    )


def _stage_score(
    ns: argparse.Namespace, corpus_text: IO[str], out: BinaryIO, stderr: TextIO
) -> None:
    loaded, issues = corpus.read_corpus(corpus_text)
    for issue in issues:
        _note(ns, stderr, f"skipped line {issue.line_no} ({issue.reason.value}): {issue.detail}")
    scored, excluded = scoring.score_corpus(loaded, _scoring_config(ns))
    _write_jsonl((scoring.scored_to_obj(s) for s in scored), out)
    by_reason: dict[str, int] = {}
    for exc in excluded:
        by_reason[exc.reason.value] = by_reason.get(exc.reason.value, 0) + 1
    summary = ", ".join(f"{reason}: {n}" for reason, n in sorted(by_reason.items()))
    _note(ns, stderr, f"scored {len(scored)}, excluded {len(excluded)}"
          + (f" ({summary})" if summary else ""))


def _stage_rank(ns: argparse.Namespace, scored_text: IO[str], out: BinaryIO) -> None:
    scored = _read_scored(scored_text)
    top = ranking.top_k(scored, ranking.RankingConfig(k=ns.top))
    _write_jsonl((scoring.scored_to_obj(s) for s in top), out)


def _aspect_schemes(
    ns: argparse.Namespace, field: corpus.Field
) -> dict[annotate.Aspect, annotate.LabelScheme]:
    """Schemes for every aspect that is available: built-in or from a flag."""
    files = {
        annotate.Aspect.TASK: ns.task_scheme,
        annotate.Aspect.METHOD: ns.method_scheme,
        annotate.Aspect.GOAL: ns.goal_scheme,
    }
    schemes = {}
    for aspect, scheme_file in files.items():
        try:
            schemes[aspect] = annotate.builtin_scheme(field, aspect, scheme_file)
        except annotate.NotEnumeratedError:
            continue
    return schemes


def _stage_stats(
    ns: argparse.Namespace, scored_text: IO[str], out: BinaryIO, stderr: TextIO
) -> None:
    ranked = _read_scored(scored_text)
    field = corpus.Field(ns.field)
    aspect = annotate.Aspect(ns.aspect)
    schemes = _aspect_schemes(ns, field)
    if aspect not in schemes:
        raise annotate.NotEnumeratedError(
            f"no label scheme available for ({field.value}, {aspect.value}); "
            "supply one with --task-scheme/--method-scheme/--goal-scheme"
        )
    annotations, issues = annotate.load_annotations(ns.annotations, schemes)
    for issue in issues:
        _note(ns, stderr, f"annotation line {issue.line_no} ({issue.kind.value}): {issue.detail}")
    pairs, uncovered = annotate.join(ranked, annotations)
    if uncovered:
        _note(ns, stderr, f"unannotated ranked papers ({len(uncovered)}): {', '.join(uncovered)}")

    if ns.table == "stats":
        stats, no_label = analytics.category_stats(pairs, aspect)
        rows = [{"label": cs.label, "n": cs.n, "s": cs.s, "m": cs.m} for cs in stats]
    elif ns.table == "distribution":
        dist, no_label = analytics.distribution(pairs, aspect)
        rows = [{"label": r.label, "count": r.count, "percentage": r.percentage} for r in dist]
    else:  # joined
        title_corpus = None
        if ns.corpus is not None:
            title_corpus, _ = corpus.load_corpus(ns.corpus)
        rows = report.top_table_rows(pairs, title_corpus)
        no_label = 0
    if no_label:
        _note(ns, stderr, f"pairs lacking a {aspect.value} label: {no_label}")
    _write_jsonl(rows, out)


def _stage_report(ns: argparse.Namespace, rows_text: IO[str], out: BinaryIO) -> None:
    rows = []
    for line_no, line in enumerate(rows_text, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"bad row on line {line_no}: {exc}") from None
        if not isinstance(obj, dict):
            raise DataFormatError(f"row on line {line_no} is not an object")
        rows.append(obj)

    if ns.format == "svg":
        try:
            dist = [
                analytics.DistributionRow(
                    label=str(r["label"]), count=int(r["count"]), percentage=float(r["percentage"])
                )
                for r in rows
            ]
        except KeyError as exc:
            raise DataFormatError(
                f"svg output needs distribution rows (missing key {exc.args[0]!r})"
            ) from None
        out.write(report.render_bar_chart(dist, ns.title))
        return
    out.write(report.render_table(rows, report.TableFormat(ns.format)))


# --- subcommand handlers ------------------------------------------------------


def _cmd_harvest(ns, stdin: BinaryIO, stdout: BinaryIO, stderr: TextIO) -> int:
    config = _harvest_config(ns, corpus.Field(ns.field))
    harvested = harvest.harvest_metadata(config)
    with _output(ns, stdout) as out:
        count = _write_corpus(harvested, out)
    _note(ns, stderr, f"harvested {count} records")
    return 0


def _cmd_citations(ns, stdin, stdout, stderr) -> int:
    loaded, issues = corpus.read_corpus(_read_text(ns.input, stdin))
    for issue in issues:
        _note(ns, stderr, f"skipped line {issue.line_no} ({issue.reason.value}): {issue.detail}")
    config = _harvest_config(ns, loaded.field, default_range=True)
    snapshots, misses = harvest.fetch_citations(loaded, config)
    merged, unknown = harvest.attach_citations(loaded, snapshots)
    with _output(ns, stdout) as out:
        _write_corpus(merged, out)
    if misses:
        _note(ns, stderr, f"citation misses ({len(misses)}): {', '.join(misses)}")
    if unknown:
        _note(ns, stderr, f"snapshots for unknown papers ignored: {', '.join(unknown)}")
    return 0


def _cmd_score(ns, stdin, stdout, stderr) -> int:
    with _output(ns, stdout) as out:
        _stage_score(ns, _read_text(ns.input, stdin), out, stderr)
    return 0


def _cmd_rank(ns, stdin, stdout, stderr) -> int:
    with _output(ns, stdout) as out:
        _stage_rank(ns, _read_text(ns.input, stdin), out)
    return 0


def _cmd_validate_annotations(ns, stdin, stdout, stderr) -> int:
    field = corpus.Field(ns.field)
    schemes = _aspect_schemes(ns, field)
    accepted, issues = annotate.load_annotations(ns.file, schemes)
    for issue in issues:
        print(f"line {issue.line_no} ({issue.kind.value}): {issue.detail}", file=stderr)
    _note(ns, stderr, f"accepted {len(accepted)} annotations, {len(issues)} issues")
    return 1 if issues else 0


def _cmd_stats(ns, stdin, stdout, stderr) -> int:
    with _output(ns, stdout) as out:
        _stage_stats(ns, _read_text(ns.input, stdin), out, stderr)
    return 0


def _cmd_report(ns, stdin, stdout, stderr) -> int:
    with _output(ns, stdout) as out:
        _stage_report(ns, _read_text(ns.input, stdin), out)
    return 0


def _cmd_pipeline(ns, stdin, stdout, stderr) -> int:
    if ns.cache_dir is not None:
        harvested = _harvest_corpus(ns, stderr)
        corpus_buf = io.StringIO()
        corpus.write_corpus(harvested, corpus_buf)
        corpus_text: IO[str] = io.StringIO(corpus_buf.getvalue())
    else:
        corpus_text = _read_text(ns.input, stdin)

    scored_buf = io.BytesIO()
    _stage_score(ns, corpus_text, scored_buf, stderr)
    ranked_buf = io.BytesIO()
    _stage_rank(ns, io.StringIO(scored_buf.getvalue().decode("utf-8")), ranked_buf)
    rows_buf = io.BytesIO()
    _stage_stats(ns, io.StringIO(ranked_buf.getvalue().decode("utf-8")), rows_buf, stderr)
    with _output(ns, stdout) as out:
        _stage_report(ns, io.StringIO(rows_buf.getvalue().decode("utf-8")), out)
    return 0


# --- parser -------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="write data to this file instead of stdout")
    p.add_argument("--quiet", action="store_true", help="suppress diagnostics")


def _add_input(p: argparse.ArgumentParser, what: str) -> None:
    p.add_argument("input", nargs="?", default="-", help=f"{what} file, or - for stdin")


def _add_harvest_flags(p: argparse.ArgumentParser, *, require_range: bool) -> None:
    p.add_argument("--from", dest="date_from", type=date.fromisoformat,
                   required=require_range, default=None, help="start of the crawl range")
    p.add_argument("--to", dest="date_to", type=date.fromisoformat,
                   required=require_range, default=None, help="end of the crawl range")
    p.add_argument("--rate", type=float, default=1.0, help="max requests per second")
    p.add_argument("--retries", type=int, default=3, help="retries per request")
    p.add_argument("--cache-dir", default=None, help="response cache directory")
    p.add_argument("--replay", action="store_true", help="serve responses from the cache only")
    p.add_argument("--metadata-endpoint", default="")
    p.add_argument("--citation-endpoint", default="")


def _add_score_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window-days", type=int, default=10, help="window half-width in days")
    p.add_argument("--min-citations", type=int, default=4)
    p.add_argument("--std", choices=["population", "sample"], default="population")
    p.add_argument("--no-self", action="store_true",
                   help="exclude the anchor paper from its own window")


def _add_scheme_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task-scheme", default=None, help="label scheme file for task")
    p.add_argument("--method-scheme", default=None, help="label scheme file for method")
    p.add_argument("--goal-scheme", default=None, help="label scheme file for goal")


def _add_stats_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--annotations", required=True, help="annotation CSV file")
    p.add_argument("--field", choices=[f.value for f in corpus.Field], required=True)
    p.add_argument("--aspect", choices=[a.value for a in annotate.Aspect], required=True)
    p.add_argument("--table", choices=["stats", "distribution", "joined"], default="stats")
    p.add_argument("--corpus", default=None, help="corpus file for titles in --table joined")
    _add_scheme_flags(p)


def _add_report_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=["table", "csv", "json", "svg"], default="table")
    p.add_argument("--title", default="", help="chart title for --format svg")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="citetrends", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("harvest", help="fetch or replay paper metadata")
    p.add_argument("--field", choices=[f.value for f in corpus.Field], required=True)
    _add_harvest_flags(p, require_range=True)
    _add_common(p)
    p.set_defaults(func=_cmd_harvest)

    p = sub.add_parser("citations", help="attach citation snapshots to a corpus")
    _add_input(p, "corpus")
    _add_harvest_flags(p, require_range=False)
    _add_common(p)
    p.set_defaults(func=_cmd_citations)

    p = sub.add_parser("score", help="compute time-window z-scores")
    _add_input(p, "corpus")
    _add_score_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("rank", help="keep the top-K scored papers")
    _add_input(p, "scored")
    p.add_argument("--top", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("validate-annotations", help="validate an annotation CSV")
    p.add_argument("--field", choices=[f.value for f in corpus.Field], required=True)
    p.add_argument("--file", required=True)
    _add_scheme_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_validate_annotations)

    p = sub.add_parser("stats", help="category statistics over ranked, annotated papers")
    _add_input(p, "ranked scored")
    _add_stats_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("report", help="render rows as table, csv, json or svg")
    _add_input(p, "rows")
    _add_report_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("pipeline", help="score | rank | stats | report in one step")
    _add_input(p, "corpus")
    _add_harvest_flags(p, require_range=False)
    _add_score_flags(p)
    p.add_argument("--top", type=int, default=100)
    _add_stats_flags(p)
    _add_report_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(
    argv: list[str] | None = None,
    *,
    stdin: BinaryIO | None = None,
    stdout: BinaryIO | None = None,
    stderr: TextIO | None = None,
) -> int:
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    stderr = stderr if stderr is not None else sys.stderr

    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except _UsageError as exc:
        stderr.write(exc.parser.format_usage())
        print(f"error: {exc}", file=stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        code = ns.func(ns, stdin, stdout, stderr)
    except (TransportError, CacheError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except (DataFormatError, ValueError) as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
