import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gensearch.gateway.stub import make_stub_gateway, write_fixture
from gensearch.generation import (
    GenerationUnavailableError,
    NO_REFERENCES_MARKER,
    SentenceSegmenter,
    answer_node,
    build_node_prompt,
    stream_answer,
    synthesize_final,
)
from gensearch.prompts import build_synthesis_prompt

from conftest import run


# -- segmentation ----------------------------------------------------------------


def _segment_all(text, piece=4):
    seg = SentenceSegmenter()
    out = []
    for i in range(0, len(text), piece):
        out.extend(seg.feed(text[i : i + piece]))
    out.extend(seg.finish())
    return seg, out


def test_two_ascii_sentences():
    seg, sentences = _segment_all("Yes. No.")
    assert seg.boundaries == [4, 8]
    assert [s for s, _, _ in sentences] == ["Yes.", " No."]


def test_decimal_point_not_a_boundary():
    seg, sentences = _segment_all("Pi is 3.14. Done.")
    assert len(sentences) == 2
    assert sentences[0][0] == "Pi is 3.14."


def test_cjk_punctuation_breaks_without_whitespace():
    seg, sentences = _segment_all("你好。再见。")
    assert seg.boundaries == [3, 6]
    assert [s for s, _, _ in sentences] == ["你好。", "再见。"]


def test_abbreviation_not_a_boundary():
    seg, sentences = _segment_all("Dr. Smith arrived. He spoke.")
    assert [s for s, _, _ in sentences] == ["Dr. Smith arrived.", " He spoke."]


def test_trailing_partial_flushed_at_finish():
    seg, sentences = _segment_all("Complete sentence. And a tail without punct")
    assert sentences[-1][0] == " And a tail without punct"
    assert seg.boundaries[-1] == len("Complete sentence. And a tail without punct")


def test_closing_quote_attached_to_sentence():
    seg, sentences = _segment_all('He said "stop." Then left.')
    assert sentences[0][0] == 'He said "stop."'


@given(
    st.lists(
        st.sampled_from(
            ["Plain words here. ", "数字是 3.14。", "Really? ", "Stop! ", "trailing bit", "你好。"]
        ),
        min_size=1,
        max_size=12,
    ),
    st.integers(min_value=1, max_value=9),
)
@settings(max_examples=80, deadline=None)
def test_sentences_partition_the_text(parts, piece):
    text = "".join(parts)
    seg, sentences = _segment_all(text, piece=piece)
    assert "".join(s for s, _, _ in sentences) == text
    assert seg.boundaries == sorted(seg.boundaries)
    if seg.boundaries:
        assert seg.boundaries[-1] == len(text)
        assert all(b > 0 for b in seg.boundaries)
        assert len(set(seg.boundaries)) == len(seg.boundaries)


# -- prompts ---------------------------------------------------------------------


def test_root_prompt_numbers_materials():
    prompt = build_node_prompt("What happened?", [], ["first passage", "second passage"])
    assert "Question: What happened?" in prompt.rendered
    assert "[1] first passage" in prompt.rendered
    assert "[2] second passage" in prompt.rendered
    assert "(none)" in prompt.rendered  # empty ancestor block


def test_ancestor_block_before_materials():
    prompt = build_node_prompt(
        "child?", [("parent?", "parent answer")], ["material text"]
    )
    rendered = prompt.rendered
    assert rendered.index("parent answer") < rendered.index("[1] material text")
    assert "Q: parent?" in rendered


def test_zero_passages_marker():
    prompt = build_node_prompt("q?", [], [])
    assert NO_REFERENCES_MARKER in prompt.rendered


def test_missing_ancestor_answer_is_contract_violation():
    with pytest.raises(ValueError, match="scheduler bug"):
        build_node_prompt("q?", [("parent?", None)], [])


# -- streaming answers -------------------------------------------------------------


def test_answer_node_records_boundaries(fixture_dir):
    prompt = build_node_prompt("q?", [], ["ref"])
    write_fixture(fixture_dir, "encyclopedia_qa", prompt.rendered, "Yes. No.")
    gw = make_stub_gateway(fixture_dir)
    stream = run(answer_node(prompt, gw, node_id="n1"))
    assert stream.text == "Yes. No."
    assert stream.sentence_boundaries == [4, 8]
    assert not stream.failed


def test_stream_failure_keeps_partial_and_marks_failed(fixture_dir):
    write_fixture(fixture_dir, "adhoc", "will break", "!ERROR:transport\n")
    gw = make_stub_gateway(fixture_dir)
    stream = run(stream_answer("will break", gw, "adhoc", node_id="n1"))
    assert stream.failed


def test_terminal_skip_reuses_node_stream_no_extra_call(fixture_dir):
    prompt = build_node_prompt("only?", [], [])
    write_fixture(fixture_dir, "encyclopedia_qa", prompt.rendered, "The answer. Done.")
    gw = make_stub_gateway(fixture_dir)

    async def go():
        node_stream = await answer_node(prompt, gw, node_id="root")
        final = await synthesize_final("only?", [], gw, terminal_stream=node_stream)
        return node_stream, final

    node_stream, final = run(go())
    assert final.text == node_stream.text
    assert final.sentence_boundaries == node_stream.sentence_boundaries
    assert len(gw.call_log.by_kind("chat")) == 1  # exactly one generation call


def test_synthesis_prompt_contains_leaf_qas_in_order(fixture_dir):
    leaf_qas = [("first leaf?", "answer one"), ("second leaf?", "answer two")]
    prompt_text = build_synthesis_prompt("main?", leaf_qas)
    assert prompt_text.index("first leaf?") < prompt_text.index("second leaf?")
    write_fixture(fixture_dir, "final_synthesis", prompt_text, "Synthesized result.")
    gw = make_stub_gateway(fixture_dir)
    final = run(synthesize_final("main?", leaf_qas, gw))
    assert final.text == "Synthesized result."


def test_all_leaves_failed_raises_generation_unavailable(stub_gateway):
    with pytest.raises(GenerationUnavailableError):
        run(synthesize_final("main?", [], stub_gateway))


def test_callbacks_fire_in_order(fixture_dir):
    prompt = build_node_prompt("cb?", [], [])
    write_fixture(fixture_dir, "encyclopedia_qa", prompt.rendered, "One. Two. Three.")
    gw = make_stub_gateway(fixture_dir)
    log = []

    async def on_delta(d):
        log.append(("delta", d))

    async def on_sentence(s, start, end):
        log.append(("sentence", s, end))

    stream = run(answer_node(prompt, gw, node_id="n", on_delta=on_delta, on_sentence=on_sentence))
    text = "".join(d for kind, *rest in log if kind == "delta" for d in rest)
    assert text == stream.text == "One. Two. Three."
    sentence_entries = [entry for entry in log if entry[0] == "sentence"]
    assert [e[1] for e in sentence_entries] == ["One.", " Two.", " Three."]
    # each sentence callback comes after the delta that completed it
    first_sentence_pos = log.index(sentence_entries[0])
    assert any(entry[0] == "delta" for entry in log[:first_sentence_pos])
