import json
import re

from click.testing import CliRunner

from gensearch.cli import insert_citation_markers, main
from gensearch.gateway.stub import write_fixture
from gensearch.prompts import build_intent_refusal_prompt

from fixture_kit import QUERY, build_demo_world


def _invoke(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def test_search_writes_four_outputs(tmp_path):
    world = build_demo_world(tmp_path / "fx")
    out = tmp_path / "out"
    result = _invoke(
        [
            "search", QUERY,
            "--stub", "--fixtures", str(world.root),
            "--out-dir", str(out),
            "--time", "2025-03-10T09:00:00",
        ]
    )
    assert result.exit_code == 0, result.output
    for name in ("answer.md", "timeline.json", "images.json", "session.json"):
        assert (out / name).is_file(), name
    answer = (out / "answer.md").read_text()
    assert re.search(r"\[\d+\]", answer)  # citation markers present
    timeline = json.loads((out / "timeline.json").read_text())
    assert timeline["groups"][0]["label"] == "Collapse"
    session = json.loads((out / "session.json").read_text())
    assert session["final_answer"]


def test_refused_query_exits_3(tmp_path):
    world = build_demo_world(tmp_path / "fx")
    bad = "refuse this query"
    write_fixture(
        world.gateway_dir,
        "intent_refusal",
        build_intent_refusal_prompt(bad),
        '{"Refusal": "Yes", "Category": "illegal content"}',
    )
    result = _invoke(
        ["search", bad, "--stub", "--fixtures", str(world.root), "--out-dir", str(tmp_path / "o")]
    )
    assert result.exit_code == 3


def test_missing_fixtures_exits_2(tmp_path):
    result = _invoke(
        ["search", "q", "--stub", "--fixtures", str(tmp_path / "nothing"), "--out-dir", str(tmp_path / "o")]
    )
    assert result.exit_code == 2


def test_stub_without_fixtures_exits_2(tmp_path):
    result = _invoke(["search", "q", "--stub", "--out-dir", str(tmp_path / "o")])
    assert result.exit_code == 2


def test_live_without_providers_exits_2(tmp_path):
    result = _invoke(["search", "q", "--out-dir", str(tmp_path / "o")])
    assert result.exit_code == 2


def test_dump_context_prints_node_passages(tmp_path):
    world = build_demo_world(tmp_path / "fx")
    from fixture_kit import SUB_A

    result = _invoke(
        [
            "search", QUERY,
            "--stub", "--fixtures", str(world.root),
            "--out-dir", str(tmp_path / "out"),
            "--dump-context", SUB_A,
        ]
    )
    assert result.exit_code == 0
    assert '"rerank_score"' in result.output


def test_eval_run_on_session_dir(tmp_path):
    world = build_demo_world(tmp_path / "fx")
    out = tmp_path / "out"
    first = _invoke(
        ["search", QUERY, "--stub", "--fixtures", str(world.root), "--out-dir", str(out)]
    )
    assert first.exit_code == 0
    report_path = tmp_path / "report.json"
    result = _invoke(
        [
            "eval", "run",
            "--facets", "Conciseness,Clarity",
            "--input", str(out),
            "--out", str(report_path),
            "--stub", "--fixtures", str(world.root),
        ]
    )
    assert result.exit_code == 0, result.output
    report = json.loads(report_path.read_text())
    assert report["item_count"] == 1
    assert report["facet_means"]["Clarity"] == 9.0  # the stub default judge reply


def test_insert_citation_markers_right_to_left():
    text = "One. Two. Three."
    events = [
        {"doc_index": 1, "end": 4},
        {"doc_index": None, "end": 9},
        {"doc_index": 3, "end": 16},
    ]
    assert insert_citation_markers(text, events) == "One.[1] Two. Three.[3]"
