"""Per-node answer generation and final synthesis.

Answers stream through an online sentence segmenter: boundaries are
detected at sentence-final punctuation (。！？.!?) — CJK stops break
immediately, ASCII stops need following whitespace, end of text, or a CJK
character — with exceptions for decimal points, single-letter initials,
and a data-file list of known abbreviations (English and Chinese
deployments share the pipeline). Sentence slices partition the text
exactly: concatenating them reproduces the full answer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Awaitable, Callable, Optional, Sequence

from .gateway.base import Gateway, GenerationParams
from .prompts import NO_REFERENCES_MARKER, build_answer_prompt, build_synthesis_prompt

logger = logging.getLogger(__name__)

_CJK_STOPS = "。！？"
_ASCII_STOPS = ".!?"
_CLOSERS = "\"'”’»」』)】》]"


class GenerationUnavailableError(RuntimeError):
    """Every leaf node failed; there is nothing to synthesize."""


@lru_cache(maxsize=1)
def _abbreviations() -> frozenset[str]:
    text = resources.files("gensearch").joinpath("data/abbreviations.txt").read_text("utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return 0x3400 <= cp <= 0x9FFF or 0x3000 <= cp <= 0x303F or 0xFF00 <= cp <= 0xFFEF


class SentenceSegmenter:
    """Incremental sentence-boundary detector over streamed text deltas.

    feed() returns sentences completed by the new delta as (text, start,
    end) triples; finish() flushes the trailing partial sentence.
    """

    def __init__(self) -> None:
        self._text: list[str] = []
        self._length = 0
        self._scan_pos = 0
        self._sentence_start = 0
        self.boundaries: list[int] = []

    @property
    def text(self) -> str:
        return "".join(self._text)

    def feed(self, delta: str) -> list[tuple[str, int, int]]:
        if not delta:
            return []
        self._text.append(delta)
        self._length += len(delta)
        return self._scan(final=False)

    def finish(self) -> list[tuple[str, int, int]]:
        sentences = self._scan(final=True)
        if self._sentence_start < self._length:
            text = self.text
            start, end = self._sentence_start, self._length
            self.boundaries.append(end)
            self._sentence_start = end
            sentences.append((text[start:end], start, end))
        return sentences

    def _is_abbreviation(self, text: str, dot_index: int) -> bool:
        k = dot_index - 1
        while k >= self._sentence_start and (text[k].isalpha() or text[k] == "."):
            k -= 1
        word = text[k + 1 : dot_index].lower()
        if not word:
            return False
        if len(word) == 1 and word.isalpha():
            return True  # an initial like "A. Smith"
        return word in _abbreviations() or word.rstrip(".") in _abbreviations()

    def _scan(self, final: bool) -> list[tuple[str, int, int]]:
        text = self.text
        sentences: list[tuple[str, int, int]] = []
        i = self._scan_pos
        n = len(text)
        while i < n:
            ch = text[i]
            if ch not in _CJK_STOPS and ch not in _ASCII_STOPS:
                i += 1
                continue
            j = i + 1
            while j < n and text[j] in _CLOSERS:
                j += 1
            if j >= n and not final:
                break  # closers (or the decisive next char) may still arrive
            if ch in _ASCII_STOPS:
                next_ch = text[j] if j < n else None
                ends = next_ch is None or next_ch.isspace() or _is_cjk(next_ch)
                if ends and ch == "." and self._is_abbreviation(text, i):
                    ends = False
                if not ends:
                    i += 1
                    continue
            start = self._sentence_start
            self.boundaries.append(j)
            self._sentence_start = j
            sentences.append((text[start:j], start, j))
            i = j
        self._scan_pos = i
        return sentences


@dataclass(frozen=True)
class NodePrompt:
    rendered: str
    sub_query: str
    ancestor_qas: tuple[tuple[str, str], ...]
    passages: tuple[str, ...]


@dataclass
class AnswerStream:
    node_id: str
    deltas: list[str] = field(default_factory=list)
    sentence_boundaries: list[int] = field(default_factory=list)
    failed: bool = False

    @property
    def text(self) -> str:
        return "".join(self.deltas)

    def sentences(self) -> list[tuple[str, int, int]]:
        text = self.text
        out = []
        start = 0
        for end in self.sentence_boundaries:
            out.append((text[start:end], start, end))
            start = end
        return out


def build_node_prompt(
    sub_query: str,
    ancestor_qas: Sequence[tuple[str, str]],
    passages: Sequence[str],
) -> NodePrompt:
    """Render the encyclopedia-QA template: question, then the ancestor
    Q&A block, then reference materials numbered in rerank order."""
    for question, answer in ancestor_qas:
        if answer is None:
            raise ValueError(f"ancestor {question!r} has no answer (scheduler bug)")
    rendered = build_answer_prompt(sub_query, ancestor_qas, passages)
    return NodePrompt(
        rendered=rendered,
        sub_query=sub_query,
        ancestor_qas=tuple(ancestor_qas),
        passages=tuple(passages),
    )


DeltaCallback = Callable[[str], Awaitable[None]]
SentenceCallback = Callable[[str, int, int], Awaitable[None]]


async def stream_answer(
    prompt_text: str,
    gw: Gateway,
    template_id: str,
    node_id: str,
    params: Optional[GenerationParams] = None,
    on_delta: Optional[DeltaCallback] = None,
    on_sentence: Optional[SentenceCallback] = None,
) -> AnswerStream:
    """Consume one chat completion, segmenting sentences online.

    A mid-stream gateway failure keeps the partial answer and marks the
    stream failed; the caller decides how to degrade.
    """
    answer = AnswerStream(node_id=node_id)
    segmenter = SentenceSegmenter()

    async def handle(sentences: list[tuple[str, int, int]]) -> None:
        for sentence, start, end in sentences:
            answer.sentence_boundaries.append(end)
            if on_sentence is not None:
                await on_sentence(sentence, start, end)

    try:
        stream = await gw.chat_complete(prompt_text, params, template_id=template_id)
        async for delta in stream:
            answer.deltas.append(delta)
            if on_delta is not None:
                await on_delta(delta)
            await handle(segmenter.feed(delta))
    except Exception as exc:
        logger.warning("generation failed for node %r: %s", node_id, exc)
        answer.failed = True
    await handle(segmenter.finish())
    return answer


async def answer_node(
    prompt: NodePrompt,
    gw: Gateway,
    node_id: str,
    params: Optional[GenerationParams] = None,
    on_delta: Optional[DeltaCallback] = None,
    on_sentence: Optional[SentenceCallback] = None,
) -> AnswerStream:
    return await stream_answer(
        prompt.rendered,
        gw,
        template_id="encyclopedia_qa",
        node_id=node_id,
        params=params,
        on_delta=on_delta,
        on_sentence=on_sentence,
    )


async def synthesize_final(
    root_query: str,
    leaf_qas: Sequence[tuple[str, str]],
    gw: Gateway,
    terminal_stream: Optional[AnswerStream] = None,
    params: Optional[GenerationParams] = None,
    on_delta: Optional[DeltaCallback] = None,
    on_sentence: Optional[SentenceCallback] = None,
) -> AnswerStream:
    """Final answer from leaf Q&As; a Terminal QDG reuses its only node's
    stream without another model call."""
    if terminal_stream is not None:
        if on_delta is not None:
            for delta in terminal_stream.deltas:
                await on_delta(delta)
        if on_sentence is not None:
            for sentence, start, end in terminal_stream.sentences():
                await on_sentence(sentence, start, end)
        return AnswerStream(
            node_id="final",
            deltas=list(terminal_stream.deltas),
            sentence_boundaries=list(terminal_stream.sentence_boundaries),
            failed=terminal_stream.failed,
        )
    if not leaf_qas:
        raise GenerationUnavailableError("all leaf nodes failed; nothing to synthesize")
    prompt = build_synthesis_prompt(root_query, leaf_qas)
    return await stream_answer(
        prompt,
        gw,
        template_id="final_synthesis",
        node_id="final",
        params=params,
        on_delta=on_delta,
        on_sentence=on_sentence,
    )


__all__ = [
    "AnswerStream",
    "GenerationUnavailableError",
    "NodePrompt",
    "NO_REFERENCES_MARKER",
    "SentenceSegmenter",
    "answer_node",
    "build_node_prompt",
    "stream_answer",
    "synthesize_final",
]
