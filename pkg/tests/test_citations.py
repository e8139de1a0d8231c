import json
import math

import pytest

from gensearch.config import PipelineConfig
from gensearch.gateway.stub import make_stub_gateway, write_default_fixture, write_fixture
from gensearch.generation import AnswerStream
from gensearch.models import Embedding, RetrievedDocument
from gensearch.presentation.citations import (
    CitationWorker,
    EntitySet,
    attach_citations,
    extract_entities,
    identify_citation,
)
from gensearch.prompts import build_citation_prompt, build_entity_prompt

from conftest import run


def _docs(n):
    return [
        RetrievedDocument(doc_index=i + 1, url=f"https://e.com/{i}", title=f"Doc {i+1}",
                          clean_text=f"body text of document {i+1}")
        for i in range(n)
    ]


def _entity_reply(**fields):
    return json.dumps(fields)


# -- entity extraction -------------------------------------------------------------


def test_entities_from_fixture(fixture_dir):
    sentence = "Trump spoke in Washington on Feb 3."
    write_fixture(
        fixture_dir,
        "info_extraction",
        build_entity_prompt(sentence),
        _entity_reply(**{"Time": "Feb 3", "Location": "Washington", "Persons": ["Trump"]}),
    )
    gw = make_stub_gateway(fixture_dir)
    es = run(extract_entities(sentence, gw))
    assert es.persons == ("Trump",)
    assert es.locations == ("Washington",)
    assert es.times == ("Feb 3",)  # scalar lifted to a list
    assert not es.is_empty()


def test_nothing_extractable_yields_empty_set(fixture_dir):
    write_default_fixture(fixture_dir, "info_extraction", "{}")
    gw = make_stub_gateway(fixture_dir)
    es = run(extract_entities("It was nice.", gw))
    assert es.is_empty()


def test_parse_failure_after_retry_yields_empty_set(fixture_dir):
    write_default_fixture(fixture_dir, "info_extraction", "not json")
    gw = make_stub_gateway(fixture_dir)
    es = run(extract_entities("Some sentence.", gw))
    assert es.is_empty()
    assert len(gw.call_log.by_template("info_extraction")) == 2  # one retry


def test_optional_numbers_field_accepted(fixture_dir):
    sentence = "Revenue hit 120 million."
    write_fixture(
        fixture_dir,
        "info_extraction",
        build_entity_prompt(sentence),
        _entity_reply(**{"Numbers": ["120 million"]}),
    )
    gw = make_stub_gateway(fixture_dir)
    es = run(extract_entities(sentence, gw))
    assert es.numbers == ("120 million",)


# -- citation identification --------------------------------------------------------


def _matching_fixture(fixture_dir, sentence, entities, docs, reply):
    descriptors = [f"{d.title} — {d.clean_text[:200]}" for d in docs]
    write_fixture(
        fixture_dir,
        "citation_source_matching",
        build_citation_prompt(sentence, entities.as_dict(), descriptors),
        reply,
    )


def test_bracketed_two_resolves_to_doc_two(fixture_dir):
    docs = _docs(3)
    es = EntitySet(persons=("Voss",))
    _matching_fixture(fixture_dir, "S.", es, docs, "[2]")
    gw = make_stub_gateway(fixture_dir)
    assert run(identify_citation("S.", es, docs, gw)) == 2


def test_minus_one_means_no_source(fixture_dir):
    docs = _docs(3)
    es = EntitySet(persons=("Voss",))
    _matching_fixture(fixture_dir, "S.", es, docs, "-1")
    gw = make_stub_gateway(fixture_dir)
    assert run(identify_citation("S.", es, docs, gw)) is None


def test_out_of_range_index_is_none(fixture_dir):
    docs = _docs(3)
    es = EntitySet(persons=("Voss",))
    _matching_fixture(fixture_dir, "S.", es, docs, "[9]")
    gw = make_stub_gateway(fixture_dir)
    assert run(identify_citation("S.", es, docs, gw)) is None


def test_preconditions(fixture_dir):
    gw = make_stub_gateway(fixture_dir)
    with pytest.raises(ValueError):
        run(identify_citation("s", EntitySet(), _docs(1), gw))
    with pytest.raises(ValueError):
        run(identify_citation("s", EntitySet(persons=("X",)), [], gw))


# -- fallback threshold ---------------------------------------------------------------


class FallbackGateway:
    """Entity extraction always empty; embeddings prescribed per text."""

    def __init__(self, sentence_vec, doc_vec, doc_text):
        self._sentence_vec = sentence_vec
        self._doc_vec = doc_vec
        self._doc_text = doc_text

    async def chat_text(self, prompt, params=None, template_id="adhoc"):
        return "{}"

    async def embed(self, texts):
        return [
            Embedding(self._doc_vec if t == self._doc_text else self._sentence_vec)
            for t in texts
        ]


def _fallback_event(cos):
    sentence_vec = [cos, math.sqrt(1 - cos * cos)]
    gw = FallbackGateway(sentence_vec, [1.0, 0.0], _docs(1)[0].clean_text[:2000])
    answer = AnswerStream(node_id="final", deltas=["Entity-free sentence."], sentence_boundaries=[21])
    events = run(attach_citations(answer, _docs(1), gw, PipelineConfig()))
    return events[0]


def test_fallback_below_threshold_is_none():
    event = _fallback_event(0.59)
    assert event.doc_index is None and event.method == "none"


def test_fallback_at_threshold_is_none():
    # strict "exceeds 0.6": equality does not cite
    event = _fallback_event(0.6)
    assert event.doc_index is None


def test_fallback_above_threshold_cites_argmax():
    event = _fallback_event(0.61)
    assert event.doc_index == 1 and event.method == "embedding-fallback"


# -- attach_citations end to end -------------------------------------------------------


def _three_sentence_setup(fixture_dir):
    docs = _docs(2)
    s1, s2, s3 = "Mayor Voss spoke on March 3.", " It was a calm day.", " Repairs cost 120 million."
    text = s1 + s2 + s3
    answer = AnswerStream(
        node_id="final",
        deltas=[text],
        sentence_boundaries=[len(s1), len(s1) + len(s2), len(text)],
    )
    # sentence 1: entities -> [1]
    write_fixture(
        fixture_dir, "info_extraction", build_entity_prompt(s1),
        _entity_reply(**{"Persons": ["Voss"], "Time": "March 3"}),
    )
    es1 = EntitySet(persons=("Voss",), times=("March 3",))
    _matching_fixture(fixture_dir, s1, es1, docs, "[1]")
    # sentence 2: no entities; fallback will miss (unrelated text, stub embeddings)
    write_fixture(fixture_dir, "info_extraction", build_entity_prompt(s2), "{}")
    # sentence 3: entities -> [2]
    write_fixture(
        fixture_dir, "info_extraction", build_entity_prompt(s3),
        _entity_reply(**{"Numbers": ["120 million"]}),
    )
    es3 = EntitySet(numbers=("120 million",))
    _matching_fixture(fixture_dir, s3, es3, docs, "[2]")
    return docs, answer


def test_three_sentence_events_one_none_two(fixture_dir, cfg):
    docs, answer = _three_sentence_setup(fixture_dir)
    gw = make_stub_gateway(fixture_dir)
    events = run(attach_citations(answer, docs, gw, cfg))
    assert [e.doc_index for e in events] == [1, None, 2]
    assert [e.sentence_index for e in events] == [0, 1, 2]
    assert events[0].method == "entity-match"
    from gensearch.evaluation import citation_density

    assert citation_density(events, 3) == pytest.approx(200 / 3, abs=0.05)


def test_referential_integrity_and_ranges(fixture_dir, cfg):
    docs, answer = _three_sentence_setup(fixture_dir)
    gw = make_stub_gateway(fixture_dir)
    events = run(attach_citations(answer, docs, gw, cfg))
    boundaries = [0] + answer.sentence_boundaries
    for event in events:
        if event.doc_index is not None:
            assert 1 <= event.doc_index <= len(docs)
        assert event.char_range == (boundaries[event.sentence_index], boundaries[event.sentence_index + 1])


def test_empty_docs_all_events_none(fixture_dir, cfg):
    answer = AnswerStream(node_id="f", deltas=["One. Two."], sentence_boundaries=[4, 9])
    gw = make_stub_gateway(fixture_dir)
    events = run(attach_citations(answer, [], gw, cfg))
    assert [e.method for e in events] == ["none", "none"]


def test_worker_emits_in_sentence_order_before_drain(fixture_dir, cfg):
    docs, answer = _three_sentence_setup(fixture_dir)
    gw = make_stub_gateway(fixture_dir)
    seen = []

    async def on_event(event):
        seen.append(event.sentence_index)

    async def go():
        worker = CitationWorker(docs, gw, cfg, on_event=on_event)
        worker.start()
        for index, (sentence, start, end) in enumerate(answer.sentences()):
            await worker.submit(sentence, start, end)
        return await worker.drain()

    events = run(go())
    assert [e.doc_index for e in events] == [1, None, 2]
    assert seen == [0, 1, 2]
