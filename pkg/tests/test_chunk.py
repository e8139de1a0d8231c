import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gensearch.config import PipelineConfig
from gensearch.retrieval.chunk import chunk_ranges, chunk_text


def test_short_text_single_chunk():
    assert chunk_ranges("x" * 300, 350, 87) == [(0, 300)]


def test_no_separator_stride_is_size_minus_overlap():
    ranges = chunk_ranges("a" * 700, 350, 87)
    assert [s for s, _ in ranges] == [0, 263, 526]
    assert all(e - s <= 350 for s, e in ranges)
    assert ranges[-1][1] == 700


def test_paragraph_boundary_wins():
    text = ("p" * 200) + "\n\n" + ("q" * 200)
    ranges = chunk_ranges(text, 350, 87)
    assert len(ranges) == 2
    assert ranges[0][1] == ranges[1][0] == 202  # split right after the blank line


def test_sentence_separator_used_when_no_newlines():
    sentence = "word " * 30  # 150 chars
    text = sentence.strip() + ". " + sentence.strip() + ". " + sentence.strip() + "."
    ranges = chunk_ranges(text, 350, 87)
    assert all(e - s <= 350 for s, e in ranges)
    covered = set()
    for s, e in ranges:
        covered.update(range(s, e))
    assert covered == set(range(len(text)))


def test_passages_carry_exact_slices(cfg):
    text = ("Lorem ipsum dolor sit amet. " * 30).strip()
    passages = chunk_text(text, cfg, parent_doc=4)
    for p in passages:
        s, e = p.char_range
        assert p.text == text[s:e]
        assert len(p.text) <= cfg.chunk_size
        assert p.parent_doc == 4


def test_empty_text_rejected(cfg):
    with pytest.raises(ValueError):
        chunk_text("", cfg)


_mixed_alphabet = st.sampled_from(
    list("abcdefgh ij.\n") + list("的是在不了有和一") + ["。", "！", "\n\n", " ", "？"]
)


@given(st.lists(_mixed_alphabet, min_size=1, max_size=4000).map("".join).filter(bool))
@settings(max_examples=60, deadline=None)
def test_bound_and_coverage_on_random_mixed_text(text):
    ranges = chunk_ranges(text, 350, 87)
    assert all(e - s <= 350 for s, e in ranges)
    assert all(e > s for s, e in ranges)
    starts = [s for s, _ in ranges]
    assert starts == sorted(starts)
    covered = set()
    for s, e in ranges:
        covered.update(range(s, e))
    assert covered == set(range(len(text)))


def test_coverage_reconstructs_text_exactly():
    text = ("Sentence one here. " * 40 + "\n\n") * 3 + "tail 结尾文字。"
    ranges = chunk_ranges(text, 350, 87)
    rebuilt = [" "] * len(text)
    for s, e in ranges:
        rebuilt[s:e] = text[s:e]
    assert "".join(rebuilt) == text
