"""Sentence-level citation attribution, decoupled from answer generation.

Per completed sentence: extract key entities; when any exist, ask the
matcher model for the most likely source document number; otherwise fall
back to embedding similarity and cite the argmax document iff its cosine
strictly exceeds the fallback threshold. The worker runs concurrently
with answer streaming (one-sentence delay): the event for sentence i is
emitted after sentence i completes and before the stream's done marker.
"""

from __future__ import annotations

import asyncio
import logging
import re
from dataclasses import dataclass, field
from typing import Awaitable, Callable, Optional, Sequence

from ..config import PipelineConfig
from ..gateway.base import Gateway, GenerationParams
from ..generation import AnswerStream
from ..jsonparse import as_str_list, parse_model_json
from ..models import Embedding, RetrievedDocument, cosine_similarity
from ..prompts import build_citation_prompt, build_entity_prompt

logger = logging.getLogger(__name__)

_ANSWER_RE = re.compile(r"\[(\d{1,2})\]")
_NO_SOURCE_RE = re.compile(r"-\s*1")

_ENTITY_FIELDS = {
    "time": "times",
    "location": "locations",
    "persons": "persons",
    "person": "persons",
    "job titles": "job_titles",
    "job title": "job_titles",
    "numbers": "numbers",
    "number": "numbers",
}


@dataclass(frozen=True)
class EntitySet:
    times: tuple[str, ...] = ()
    locations: tuple[str, ...] = ()
    persons: tuple[str, ...] = ()
    job_titles: tuple[str, ...] = ()
    numbers: tuple[str, ...] = ()  # optional extension used by the matcher prompt

    def is_empty(self) -> bool:
        return not (self.times or self.locations or self.persons or self.job_titles or self.numbers)

    def as_dict(self) -> dict[str, list[str]]:
        return {
            "times": list(self.times),
            "locations": list(self.locations),
            "persons": list(self.persons),
            "job_titles": list(self.job_titles),
            "numbers": list(self.numbers),
        }


@dataclass(frozen=True)
class CitationEvent:
    sentence_index: int
    char_range: tuple[int, int]
    doc_index: Optional[int]  # 1-based, None when nothing matched
    method: str  # entity-match | embedding-fallback | none


async def extract_entities(sentence: str, gw: Gateway) -> EntitySet:
    """Entity extraction with one retry; failures yield an empty set so the
    sentence falls through to the embedding fallback."""
    if not sentence.strip():
        raise ValueError("sentence must be non-empty")
    prompt = build_entity_prompt(sentence)
    params = GenerationParams(temperature=0.0)
    data = None
    for _ in range(2):
        try:
            reply = await gw.chat_text(prompt, params, template_id="info_extraction")
        except Exception as exc:
            logger.warning("entity extraction call failed: %s", exc)
            return EntitySet()
        data = parse_model_json(reply)
        if isinstance(data, dict):
            break
        data = None
    if data is None:
        return EntitySet()
    collected: dict[str, list[str]] = {
        "times": [], "locations": [], "persons": [], "job_titles": [], "numbers": []
    }
    for key, value in data.items():
        attr = _ENTITY_FIELDS.get(str(key).strip().lower())
        if attr:
            collected[attr].extend(as_str_list(value))
    return EntitySet(**{k: tuple(v) for k, v in collected.items()})


def _document_descriptor(doc: RetrievedDocument) -> str:
    snippet = doc.clean_text[:200].replace("\n", " ")
    return f"{doc.title} — {snippet}" if doc.title else snippet


async def identify_citation(
    sentence: str,
    entities: EntitySet,
    docs: Sequence[RetrievedDocument],
    gw: Gateway,
) -> Optional[int]:
    """The matcher's bracketed document number, or None for -1 /
    unparseable / out-of-range replies."""
    if entities.is_empty():
        raise ValueError("identify_citation requires a non-empty entity set")
    if not docs:
        raise ValueError("identify_citation requires at least one document")
    prompt = build_citation_prompt(
        sentence, entities.as_dict(), [_document_descriptor(d) for d in docs]
    )
    try:
        reply = await gw.chat_text(
            prompt, GenerationParams(temperature=0.0), template_id="citation_source_matching"
        )
    except Exception as exc:
        logger.warning("citation matching call failed: %s", exc)
        return None
    m = _ANSWER_RE.search(reply)
    if m:
        index = int(m.group(1))
        if 1 <= index <= len(docs):
            return index
        logger.warning("citation index %d out of range (1..%d)", index, len(docs))
        return None
    if _NO_SOURCE_RE.search(reply):
        return None
    logger.warning("unparseable citation reply: %r", reply[:80])
    return None


class CitationAttacher:
    """Shared per-sentence citation logic; doc embeddings computed lazily."""

    def __init__(
        self,
        docs: Sequence[RetrievedDocument],
        gw: Gateway,
        cfg: PipelineConfig,
    ):
        self.docs = list(docs)
        self.gw = gw
        self.cfg = cfg
        self._doc_embeddings: Optional[list[Embedding]] = None

    async def _embedding_fallback(self, sentence: str) -> Optional[int]:
        if self._doc_embeddings is None:
            texts = [d.clean_text[:2000] for d in self.docs]
            self._doc_embeddings = await self.gw.embed(texts)
        [sent_emb] = await self.gw.embed([sentence])
        best_index, best_sim = None, -2.0
        for i, doc_emb in enumerate(self._doc_embeddings):
            sim = cosine_similarity(sent_emb, doc_emb)
            if sim > best_sim:
                best_index, best_sim = i, sim
        if best_index is not None and best_sim > self.cfg.citation_fallback_threshold:
            return best_index + 1
        return None

    async def cite_sentence(
        self, sentence: str, sentence_index: int, char_range: tuple[int, int]
    ) -> CitationEvent:
        if not self.docs or not sentence.strip():
            return CitationEvent(sentence_index, char_range, None, "none")
        entities = EntitySet()
        try:
            entities = await extract_entities(sentence, self.gw)
        except Exception as exc:
            logger.warning("entity extraction degraded to fallback: %s", exc)
        if not entities.is_empty():
            doc_index = await identify_citation(sentence, entities, self.docs, self.gw)
            if doc_index is not None:
                return CitationEvent(sentence_index, char_range, doc_index, "entity-match")
            return CitationEvent(sentence_index, char_range, None, "none")
        try:
            doc_index = await self._embedding_fallback(sentence)
        except Exception as exc:
            logger.warning("embedding fallback failed: %s", exc)
            doc_index = None
        method = "embedding-fallback" if doc_index is not None else "none"
        return CitationEvent(sentence_index, char_range, doc_index, method)


async def attach_citations(
    answer: AnswerStream,
    docs: Sequence[RetrievedDocument],
    gw: Gateway,
    cfg: PipelineConfig,
) -> list[CitationEvent]:
    """Cite every sentence of a completed answer, in sentence order."""
    attacher = CitationAttacher(docs, gw, cfg)
    events = []
    for index, (sentence, start, end) in enumerate(answer.sentences()):
        events.append(await attacher.cite_sentence(sentence, index, (start, end)))
    return events


class CitationWorker:
    """Async consumer fed by the answer stream's sentence callback.

    Events come out in sentence order; close() marks the end of input and
    drain() waits for completion — always before the pipeline's done event.
    """

    _CLOSE = object()

    def __init__(
        self,
        docs: Sequence[RetrievedDocument],
        gw: Gateway,
        cfg: PipelineConfig,
        on_event: Optional[Callable[[CitationEvent], Awaitable[None]]] = None,
    ):
        self._attacher = CitationAttacher(docs, gw, cfg)
        self._queue: asyncio.Queue = asyncio.Queue()
        self._on_event = on_event
        self._task: Optional[asyncio.Task] = None
        self._count = 0
        self.events: list[CitationEvent] = []

    def start(self) -> None:
        self._task = asyncio.ensure_future(self._run())

    async def submit(self, sentence: str, start: int, end: int) -> None:
        index = self._count
        self._count += 1
        await self._queue.put((sentence, index, (start, end)))

    async def _run(self) -> None:
        while True:
            item = await self._queue.get()
            if item is self._CLOSE:
                return
            sentence, index, char_range = item
            event = await self._attacher.cite_sentence(sentence, index, char_range)
            self.events.append(event)
            if self._on_event is not None:
                await self._on_event(event)

    async def drain(self) -> list[CitationEvent]:
        await self._queue.put(self._CLOSE)
        if self._task is not None:
            await self._task
        return self.events
