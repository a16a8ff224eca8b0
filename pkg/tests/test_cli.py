import io
import json
import xml.etree.ElementTree as ET
from random import Random

import pytest

from citetrends.cli import main
from citetrends.corpus import write_corpus
from citetrends.scoring import ScoringConfig

from oracles import brute_force_scores, random_corpus


def run(argv, stdin=b""):
    out, err = io.BytesIO(), io.StringIO()
    code = main(argv, stdin=io.BytesIO(stdin), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def corpus_bytes(corpus):
    buf = io.StringIO()
    write_corpus(corpus, buf)
    return buf.getvalue().encode()


def jsonl(raw):
    return [json.loads(line) for line in raw.decode().splitlines()]


class TestUsage:
    def test_no_arguments_prints_usage_and_exits_1(self):
        code, out, err = run([])
        assert code == 1
        assert out == b""
        assert "usage" in err.lower()

    def test_unknown_subcommand_exits_1(self):
        code, _, err = run(["frobnicate"])
        assert code == 1

    def test_unknown_flag_exits_1(self):
        code, _, _ = run(["rank", "--sideways"])
        assert code == 1

    def test_score_defaults_match_documented_parameters(self):
        from citetrends.cli import build_parser

        ns = build_parser().parse_args(["score"])
        assert ns.window_days == 10
        assert ns.min_citations == 4
        ns = build_parser().parse_args(["rank"])
        assert ns.top == 100


class TestScore:
    def test_score_matches_brute_force_oracle(self):
        corpus = random_corpus(Random(20), max_papers=80, max_span=90)
        code, out, err = run(
            ["score", "--window-days", "10", "--min-citations", "4", "--quiet"],
            stdin=corpus_bytes(corpus),
        )
        assert code == 0
        rows = jsonl(out)
        want, _ = brute_force_scores(corpus, ScoringConfig())
        assert {r["id"] for r in rows} == set(want)
        for r in rows:
            assert r["z_score"] == pytest.approx(want[r["id"]], abs=1e-9)

    def test_score_reads_file_argument(self, tmp_path):
        corpus = random_corpus(Random(21), max_papers=30, max_span=40)
        path = tmp_path / "c.jsonl"
        path.write_bytes(corpus_bytes(corpus))
        code, out, _ = run(["score", str(path), "--quiet"])
        assert code == 0
        piped = run(["score", "--quiet"], stdin=corpus_bytes(corpus))[1]
        assert out == piped

    def test_no_self_and_std_flags_change_scores(self):
        corpus = random_corpus(Random(23), max_papers=60, max_span=30)
        base = run(["score", "--quiet"], stdin=corpus_bytes(corpus))[1]
        no_self = run(["score", "--quiet", "--no-self"], stdin=corpus_bytes(corpus))[1]
        sample = run(["score", "--quiet", "--std", "sample"], stdin=corpus_bytes(corpus))[1]
        want_no_self, _ = brute_force_scores(
            corpus, ScoringConfig(include_self=False)
        )
        got = {r["id"]: r["z_score"] for r in jsonl(no_self)}
        assert got.keys() == want_no_self.keys()
        for pid, z in got.items():
            assert z == pytest.approx(want_no_self[pid], abs=1e-9)
        assert base != no_self
        assert base != sample

    def test_corpus_without_citations_is_user_error(self):
        corpus = random_corpus(Random(22), max_papers=5, max_span=5)
        stripped = corpus_bytes(corpus).decode().splitlines()
        rows = []
        for line in stripped:
            obj = json.loads(line)
            obj.pop("citations", None)
            obj.pop("citations_asof", None)
            rows.append(json.dumps(obj))
        code, _, err = run(["score", "--quiet"], stdin="\n".join(rows).encode() + b"\n")
        assert code == 1
        assert "error" in err


class TestRank:
    def test_table1_top3_order(self, table1_scored_path):
        code, out, _ = run(["rank", str(table1_scored_path), "--top", "3", "--quiet"])
        assert code == 0
        rows = jsonl(out)
        assert [r["id"] for r in rows] == ["1809.01083", "1810.04805", "1802.05365"]
        assert [r["z_score"] for r in rows] == [13.0, 12.0, 11.2]

    def test_rank_is_stable_under_large_top(self, table1_scored_path):
        code, out, _ = run(["rank", str(table1_scored_path), "--top", "100", "--quiet"])
        assert code == 0
        assert len(jsonl(out)) == 3

    def test_unsorted_input_is_user_error(self):
        rows = [
            {"id": "a", "z_score": 1.0, "window_count": 2, "window_mean": 0.0,
             "window_std": 1.0, "citations": 5},
            {"id": "b", "z_score": 2.0, "window_count": 2, "window_mean": 0.0,
             "window_std": 1.0, "citations": 5},
        ]
        payload = "\n".join(json.dumps(r) for r in rows).encode() + b"\n"
        code, _, err = run(["rank", "--quiet"], stdin=payload)
        assert code == 1

    def test_missing_input_file_is_environment_error(self):
        code, _, _ = run(["rank", "/nonexistent/scored.jsonl", "--quiet"])
        assert code == 2


class TestValidateAnnotations:
    def test_fixture_file_validates_clean(self, annotations_path):
        code, _, err = run(
            ["validate-annotations", "--field", "cs.CL", "--file", str(annotations_path)]
        )
        assert code == 0
        assert "accepted 5" in err

    def test_unknown_label_fails_validation(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("paper_id,task,method,goal\np1,Quantum NLP,,\n")
        code, _, err = run(["validate-annotations", "--field", "cs.CL", "--file", str(bad)])
        assert code == 1
        assert "Quantum NLP" in err

    def test_scheme_file_flag(self, tmp_path):
        scheme = tmp_path / "goals.txt"
        scheme.write_text("Better accuracy\nDifficult task\n")
        ann = tmp_path / "ann.csv"
        ann.write_text("paper_id,task,method,goal\np1,,,Better accuracy\n")
        code, _, err = run(
            ["validate-annotations", "--field", "cs.CL", "--file", str(ann),
             "--goal-scheme", str(scheme)]
        )
        assert code == 0


class TestHarvestCommands:
    def test_harvest_replay(self, harvest_cache):
        code, out, err = run(
            ["harvest", "--from", "2017-06-01", "--to", "2018-12-31", "--field", "cs.CL",
             "--cache-dir", str(harvest_cache), "--replay", "--quiet"]
        )
        assert code == 0
        assert len(jsonl(out)) == 5

    def test_citations_replay_attaches_counts(self, harvest_cache):
        _, corpus_out, _ = run(
            ["harvest", "--from", "2017-06-01", "--to", "2018-12-31", "--field", "cs.CL",
             "--cache-dir", str(harvest_cache), "--replay", "--quiet"]
        )
        code, out, err = run(
            ["citations", "--cache-dir", str(harvest_cache), "--replay"],
            stdin=corpus_out,
        )
        assert code == 0
        by_id = {r["id"]: r for r in jsonl(out)}
        assert by_id["1809.01083"]["citations"] == 18
        assert by_id["1810.04805"]["citations"] == 20
        assert by_id["1802.05365"]["citations"] == 261
        assert "citations" not in by_id["1808.09381"]
        assert "1808.09381" in err  # reported as a miss

    def test_missing_cache_is_environment_error(self, tmp_path):
        code, _, _ = run(
            ["harvest", "--from", "2017-06-01", "--to", "2018-12-31", "--field", "cs.CL",
             "--cache-dir", str(tmp_path / "absent"), "--replay", "--quiet"]
        )
        assert code == 2


class TestReportCommand:
    DIST = [
        {"label": "A", "count": 50, "percentage": 50.0},
        {"label": "B", "count": 30, "percentage": 30.0},
        {"label": "C", "count": 20, "percentage": 20.0},
    ]

    def payload(self):
        return "\n".join(json.dumps(r) for r in self.DIST).encode() + b"\n"

    def test_svg_output_parses_with_three_bars(self):
        code, out, _ = run(["report", "--format", "svg", "--title", "tasks"],
                           stdin=self.payload())
        assert code == 0
        root = ET.fromstring(out)
        bars = [el for el in root.iter("{http://www.w3.org/2000/svg}rect")
                if el.get("class") == "bar"]
        assert len(bars) == 3

    def test_csv_output(self):
        code, out, _ = run(["report", "--format", "csv"], stdin=self.payload())
        assert code == 0
        assert out.startswith(b"label,count,percentage\r\n")

    def test_svg_needs_distribution_rows(self):
        code, _, err = run(["report", "--format", "svg"],
                           stdin=b'{"label": "x", "n": 1}\n')
        assert code == 1

    def test_out_flag_writes_file(self, tmp_path):
        target = tmp_path / "table.csv"
        code, out, _ = run(
            ["report", "--format", "csv", "--out", str(target)], stdin=self.payload()
        )
        assert code == 0
        assert out == b""
        assert target.read_bytes().startswith(b"label,count,percentage")


class TestPipeline:
    def stage_flags(self, annotations_path):
        return [
            "--annotations", str(annotations_path), "--field", "cs.CL",
            "--aspect", "task", "--table", "distribution", "--format", "csv",
        ]

    def corpus_via_harvest(self, harvest_cache):
        _, corpus_out, _ = run(
            ["harvest", "--from", "2017-06-01", "--to", "2018-12-31", "--field", "cs.CL",
             "--cache-dir", str(harvest_cache), "--replay", "--quiet"]
        )
        _, attached, _ = run(
            ["citations", "--cache-dir", str(harvest_cache), "--replay", "--quiet"],
            stdin=corpus_out,
        )
        return attached

    def test_piped_stages_equal_pipeline_byte_for_byte(self, harvest_cache, annotations_path):
        corpus_jsonl = self.corpus_via_harvest(harvest_cache)

        _, scored, _ = run(["score", "--quiet"], stdin=corpus_jsonl)
        _, ranked, _ = run(["rank", "--top", "100", "--quiet"], stdin=scored)
        _, rows, _ = run(
            ["stats", "--quiet", "--annotations", str(annotations_path), "--field", "cs.CL",
             "--aspect", "task", "--table", "distribution"],
            stdin=ranked,
        )
        _, piped, _ = run(["report", "--format", "csv", "--quiet"], stdin=rows)

        code, pipelined, _ = run(
            ["pipeline", "--quiet"] + self.stage_flags(annotations_path),
            stdin=corpus_jsonl,
        )
        assert code == 0
        assert pipelined == piped

    def test_pipeline_with_harvest_mode(self, harvest_cache, annotations_path):
        corpus_jsonl = self.corpus_via_harvest(harvest_cache)
        _, from_stdin, _ = run(
            ["pipeline", "--quiet"] + self.stage_flags(annotations_path),
            stdin=corpus_jsonl,
        )
        code, from_cache, _ = run(
            ["pipeline", "--quiet", "--from", "2017-06-01", "--to", "2018-12-31",
             "--field", "cs.CL", "--cache-dir", str(harvest_cache), "--replay"]
            + self.stage_flags(annotations_path),
        )
        assert code == 0
        assert from_cache == from_stdin

    def test_pipeline_distribution_values(self, harvest_cache, annotations_path):
        # Window math on the fixture: three papers are scored (z ~ 1.41, -0.70,
        # -0.72), all annotated; two carry "Text representations", one
        # "Emotion Detection".
        corpus_jsonl = self.corpus_via_harvest(harvest_cache)
        _, out, _ = run(
            ["pipeline", "--quiet", "--annotations", str(annotations_path),
             "--field", "cs.CL", "--aspect", "task", "--table", "distribution",
             "--format", "json"],
            stdin=corpus_jsonl,
        )
        rows = json.loads(out)
        assert rows[0]["label"] == "Text representations"
        assert rows[0]["count"] == 2
        assert rows[1]["label"] == "Emotion Detection"
        assert rows[1]["count"] == 1
        assert rows[0]["percentage"] == pytest.approx(200 / 3, abs=1e-9)

    def test_stats_table_output(self, harvest_cache, annotations_path):
        corpus_jsonl = self.corpus_via_harvest(harvest_cache)
        _, scored, _ = run(["score", "--quiet"], stdin=corpus_jsonl)
        _, ranked, _ = run(["rank", "--quiet"], stdin=scored)
        code, rows, _ = run(
            ["stats", "--quiet", "--annotations", str(annotations_path), "--field", "cs.CL",
             "--aspect", "task"],
            stdin=ranked,
        )
        assert code == 0
        parsed = jsonl(rows)
        assert [r["label"] for r in parsed] == ["Text representations", "Emotion Detection"]
        assert parsed[0]["n"] == 2
