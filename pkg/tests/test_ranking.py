import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gensearch.config import PipelineConfig
from gensearch.gateway.stub import make_stub_gateway, write_default_fixture, write_fixture
from gensearch.models import Embedding, Passage
from gensearch.prompts import build_keyword_prompt
from gensearch.ranking import (
    KeywordSet,
    deduplicate,
    extract_keywords,
    rerank_passages,
    select_passages,
    selection_scores,
)

from conftest import run


def _passages(texts):
    return [
        Passage(parent_doc=1, char_range=(i * 1000, i * 1000 + max(1, len(t))), text=t)
        for i, t in enumerate(texts)
    ]


def _embeddings_from_gram(gram):
    chol = np.linalg.cholesky(np.asarray(gram, dtype=float))
    return [Embedding(chol[i]) for i in range(len(gram))]


# -- dedup -----------------------------------------------------------------------


def test_identical_passages_keep_only_first(cfg):
    e = Embedding([1.0, 0.0, 0.0])
    ps = _passages(["same", "same", "same"])
    kept = deduplicate(ps, [e, e, e], cfg)
    assert [p.char_range for p in kept] == [ps[0].char_range]


def test_conflict_graph_keeps_one_and_three(cfg):
    # sims: (1,2)=0.9 >= 0.8; (1,3)=(2,3)=0.5
    embs = _embeddings_from_gram([[1, 0.9, 0.5], [0.9, 1, 0.5], [0.5, 0.5, 1]])
    ps = _passages(["p1", "p2", "p3"])
    kept = deduplicate(ps, embs, cfg)
    assert [p.text for p in kept] == ["p1", "p3"]


def test_no_conflicts_keeps_all(cfg):
    embs = _embeddings_from_gram([[1, 0.3, 0.1], [0.3, 1, 0.2], [0.1, 0.2, 1]])
    ps = _passages(["a", "b", "c"])
    assert len(deduplicate(ps, embs, cfg)) == 3


def test_dedup_output_is_maximal_independent_set(cfg):
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(1, 12))
        vectors = rng.normal(size=(n, 6))
        embs = [Embedding(v) for v in vectors]
        matrix = np.stack([e.values for e in embs])
        sims = matrix @ matrix.T
        ps = _passages([f"p{i}" for i in range(n)])
        kept = deduplicate(ps, embs, cfg)
        kept_idx = [int(p.text[1:]) for p in kept]
        # feasibility: pairwise below threshold
        for a in range(len(kept_idx)):
            for b in range(a + 1, len(kept_idx)):
                assert sims[kept_idx[a], kept_idx[b]] < cfg.dedup_threshold
        # maximality: every discarded passage conflicts with a kept one
        for i in range(n):
            if i not in kept_idx:
                assert any(sims[i, k] >= cfg.dedup_threshold for k in kept_idx)


def test_dedup_requires_matching_embeddings(cfg):
    with pytest.raises(ValueError):
        deduplicate(_passages(["a", "b"]), [Embedding([1.0, 0.0])], cfg)


# -- keyword extraction -------------------------------------------------------------


def test_keywords_from_fixture(fixture_dir):
    q = "Shanghai weather last week"
    write_fixture(
        fixture_dir,
        "keyword_extraction",
        build_keyword_prompt(q),
        json.dumps(["Shanghai", "weather", "2025-01-27 to 2025-02-02"]),
    )
    gw = make_stub_gateway(fixture_dir)
    ks = run(extract_keywords(q, gw))
    assert ks.keywords == ("shanghai", "weather", "2025-01-27 to 2025-02-02")
    assert ks.source_subquery == q


def test_keyword_parse_failure_falls_back_to_content_tokens(fixture_dir):
    write_default_fixture(fixture_dir, "keyword_extraction", "total nonsense reply")
    gw = make_stub_gateway(fixture_dir)
    ks = run(extract_keywords("the economy of Norway", gw))
    assert "economy" in ks.keywords and "norway" in ks.keywords
    assert "the" not in ks.keywords  # stopword filtered


def test_all_stopword_query_keeps_all_tokens(fixture_dir):
    write_default_fixture(fixture_dir, "keyword_extraction", "nonsense")
    gw = make_stub_gateway(fixture_dir)
    ks = run(extract_keywords("what is this", gw))
    assert set(ks.keywords) == {"what", "is", "this"}


# -- selection -----------------------------------------------------------------------


def test_keep_seven_of_ten(cfg):
    ps = _passages([f"text about things number {i}" for i in range(10)])
    kept = select_passages(ps, KeywordSet(keywords=("things",)), cfg)
    assert len(kept) == 7


def test_single_passage_always_kept(cfg):
    ps = _passages(["only one passage"])
    assert len(select_passages(ps, KeywordSet(keywords=("zzz",)), cfg)) == 1


def test_hand_computed_scores_two_keywords(cfg):
    # 5 scorer tokens per passage; keyword counts: p1 tax=2, p2 budget=1, p3 none
    texts = [
        "tax rise tax plan announced",
        "budget talks continue city hall",
        "football match ended late night",
    ]
    ks = KeywordSet(keywords=("tax", "budget"))
    scores = selection_scores(_passages(texts), ks, cfg)
    # KF raw = [2/5, 1/5, 0] -> normalized [1, .5, 0]
    # TFIDF raw = [2ln2, 1ln2, 0] -> normalized [1, .5, 0]
    assert scores[0] == pytest.approx(1.0, abs=1e-12)
    assert scores[1] == pytest.approx(0.5, abs=1e-12)
    assert scores[2] == pytest.approx(0.0, abs=1e-12)


def test_keyword_rich_passage_ranks_strictly_highest(cfg):
    texts = [
        "tax rise tax plan announced",
        "weather sunny warm day outlook",
        "football match ended late night",
    ]
    scores = selection_scores(_passages(texts), KeywordSet(keywords=("tax",)), cfg)
    assert scores[0] > max(scores[1], scores[2])
    assert scores[1] == scores[2] == 0.0


def test_zero_keyword_hits_scores_all_zero_keeps_prefix(cfg):
    ps = _passages(["alpha beta", "gamma delta", "epsilon zeta"])
    kept = select_passages(ps, KeywordSet(keywords=("missing",)), cfg)
    # ceil(0.7*3)=3 -> all kept despite zero scores
    assert len(kept) == 3
    assert all(p.selection_score == 0.0 for p in kept)


def test_ties_broken_by_original_order(cfg):
    ps = _passages(["same tokens here now", "same tokens here now", "same tokens here now"])
    kept = select_passages(ps, KeywordSet(keywords=("tokens",)), PipelineConfig(selection_ratio=0.5))
    assert len(kept) == 2
    assert [p.char_range[0] for p in kept] == [0, 1000]


@given(st.integers(min_value=1, max_value=20))
def test_selection_cardinality(n):
    cfg = PipelineConfig()
    ps = _passages([f"filler words piece {i}" for i in range(n)])
    kept = select_passages(ps, KeywordSet(keywords=("filler",)), cfg)
    assert len(kept) == max(1, math.ceil(0.7 * n))


@given(
    st.lists(
        st.lists(st.sampled_from(["tax", "city", "river", "plan", "vote"]), min_size=3, max_size=10),
        min_size=2,
        max_size=6,
    ),
    st.integers(min_value=0, max_value=5),
)
@settings(max_examples=80, deadline=None)
def test_adding_keyword_occurrence_never_lowers_rank(token_lists, target_seed):
    cfg = PipelineConfig()
    ks = KeywordSet(keywords=("tax",))
    target = target_seed % len(token_lists)
    base = [" ".join(tokens) for tokens in token_lists]
    boosted = list(base)
    boosted[target] = base[target] + " tax"

    def rank(scores, i):
        return sum(1 for s in scores if s > scores[i])

    base_scores = selection_scores(_passages(base), ks, cfg)
    boosted_scores = selection_scores(_passages(boosted), ks, cfg)
    assert rank(boosted_scores, target) <= rank(base_scores, target)


# -- rerank ------------------------------------------------------------------------


def test_stub_jaccard_orders_on_topic_first(fixture_dir, cfg):
    gw = make_stub_gateway(fixture_dir)
    ps = _passages([
        "fluffy cats sleeping on warm windowsills",
        "the solar eclipse of 2024 crossed north america",
    ])
    out = run(rerank_passages("solar eclipse 2024", ps, gw, cfg))
    assert out[0].text.startswith("the solar eclipse")
    assert out[0].rerank_score > out[1].rerank_score


def test_equal_scores_preserve_input_order(fixture_dir, cfg):
    gw = make_stub_gateway(fixture_dir)
    ps = _passages(["identical words here", "identical words here"])
    out = run(rerank_passages("identical words here", ps, gw, cfg))
    assert [p.char_range[0] for p in out] == [0, 1000]


def test_single_passage_unchanged(fixture_dir, cfg):
    gw = make_stub_gateway(fixture_dir)
    ps = _passages(["just one"])
    out = run(rerank_passages("query", ps, gw, cfg))
    assert len(out) == 1 and out[0].text == "just one"


def test_rerank_failure_degrades_to_selection_order(cfg, fixture_dir):
    class ExplodingGateway:
        async def rerank_score(self, query, passages):
            raise RuntimeError("rerank model down")

    ps = [
        Passage(parent_doc=1, char_range=(0, 5), text="first", selection_score=0.9),
        Passage(parent_doc=1, char_range=(5, 10), text="second", selection_score=0.4),
    ]
    out = run(rerank_passages("q", ps, ExplodingGateway(), cfg))
    assert [p.text for p in out] == ["first", "second"]
    assert [p.rerank_score for p in out] == [0.9, 0.4]


@given(st.lists(st.sampled_from(["alpha beta", "beta gamma", "gamma delta", "alpha gamma"]), min_size=1, max_size=8))
@settings(max_examples=40, deadline=None)
def test_rerank_is_a_permutation(texts):
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        gw = make_stub_gateway(d)
        cfg = PipelineConfig()
        ps = _passages(texts)
        out = run(rerank_passages("alpha beta", ps, gw, cfg))
        assert sorted(p.text for p in out) == sorted(texts)
        assert sorted(p.char_range for p in out) == sorted(p.char_range for p in ps)
