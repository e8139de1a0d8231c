"""End-to-end session orchestration.

One search session is an isolated task graph: preprocess -> plan the QDG ->
retrieve/rank for every sub-query -> answer nodes layer by layer (layer
members run concurrently) -> synthesize the final answer while the citation
worker consumes completed sentences and timeline/image filtering run
alongside -> image placement over the finished paragraphs -> done.

Every user-visible event goes through ``emit`` (the SSE stream and the CLI
both consume it) and is appended to the session transcript; the transcript
additionally records sentence-completion markers so citation ordering is
auditable offline.
"""

from __future__ import annotations

import asyncio
import logging
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Awaitable, Callable, Optional, Sequence

from .cache import DocumentCache
from .config import PipelineConfig
from .gateway.base import Gateway
from .generation import (
    AnswerStream,
    answer_node,
    build_node_prompt,
    synthesize_final,
)
from .models import Passage, RetrievedDocument
from .preproc import IntentAnalysis, UserContext, analyze_intent, rewrite_query
from .presentation.choreography import (
    CrossmodalScorer,
    ImagePlacement,
    assign_images,
    filter_images,
    placement_matrix,
)
from .presentation.citations import CitationEvent, CitationWorker
from .presentation.timeline import (
    TimelineGroup,
    extract_events,
    group_events,
    merge_events,
)
from .qdg import QDG, Node, ancestors, build_qdg, topo_layers
from .ranking import (
    RankedContext,
    deduplicate,
    extract_keywords,
    rerank_passages,
    select_passages,
)
from .retrieval.chunk import chunk_text
from .retrieval.clean import clean_document
from .retrieval.expand import expand_query
from .retrieval.sources import RetrievalError, SearchSource, fetch_multi_source
from .serialize import (
    citation_event_to_dict,
    document_to_dict,
    passage_to_dict,
    placement_to_dict,
    timeline_group_to_dict,
)

logger = logging.getLogger(__name__)

EmitCallback = Callable[[str, dict], Awaitable[None]]

REFUSAL_MESSAGE = "This query cannot be answered by the search service."


class PipelineError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class SearchSession:
    session_id: str
    original_query: str
    user_context: UserContext
    created_at: float
    chosen_option: Optional[str] = None
    intent: Optional[IntentAnalysis] = None
    rewritten_query: str = ""
    qdg: Optional[QDG] = None
    documents: list[RetrievedDocument] = field(default_factory=list)
    node_contexts: dict[str, RankedContext] = field(default_factory=dict)
    selected_passages: dict[str, list[Passage]] = field(default_factory=dict)
    node_answers: dict[str, AnswerStream] = field(default_factory=dict)
    final_answer: Optional[AnswerStream] = None
    citation_events: list[CitationEvent] = field(default_factory=list)
    timeline_groups: list[TimelineGroup] = field(default_factory=list)
    image_placements: list[ImagePlacement] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    transcript: list[dict] = field(default_factory=list)
    error: Optional[tuple[str, str]] = None

    def warn(self, message: str) -> None:
        logger.warning("[session %s] %s", self.session_id, message)
        self.warnings.append(message)

    def to_dict(self) -> dict:
        qdg_dict = None
        if self.qdg is not None:
            qdg_dict = {
                "root_query": self.qdg.root_query,
                "nodes": [{"id": n.id, "query": n.sub_query} for n in self.qdg.nodes],
                "edges": [[p, c] for p, c in self.qdg.edges],
            }
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "original_query": self.original_query,
            "chosen_option": self.chosen_option,
            "user_context": {
                "local_time": self.user_context.local_time.isoformat(),
                "location": self.user_context.location,
                "language": self.user_context.language,
            },
            "intent": {
                "refusal": self.intent.refusal if self.intent else False,
                "refusal_category": self.intent.refusal_category if self.intent else None,
                "needs_clarification": (
                    self.intent.needs_clarification if self.intent else False
                ),
                "options": list(self.intent.options) if self.intent else [],
            },
            "rewritten_query": self.rewritten_query,
            "qdg": qdg_dict,
            "documents": [document_to_dict(d) for d in self.documents],
            "node_contexts": {
                node_id: [passage_to_dict(p) for p in ctx.passages]
                for node_id, ctx in self.node_contexts.items()
            },
            "node_answers": {
                node_id: {
                    "text": stream.text,
                    "sentence_boundaries": list(stream.sentence_boundaries),
                    "failed": stream.failed,
                    "template_id": "encyclopedia_qa",
                }
                for node_id, stream in self.node_answers.items()
            },
            "final_answer_template_id": (
                "terminal-skip" if self.qdg is not None and self.qdg.is_terminal else "final_synthesis"
            ),
            "final_answer": self.final_answer.text if self.final_answer else "",
            "final_sentence_boundaries": (
                list(self.final_answer.sentence_boundaries) if self.final_answer else []
            ),
            "citation_events": [citation_event_to_dict(e) for e in self.citation_events],
            "timeline": [timeline_group_to_dict(g) for g in self.timeline_groups],
            "images": [placement_to_dict(p) for p in self.image_placements],
            "timings": dict(self.timings),
            "warnings": list(self.warnings),
            "error": {"code": self.error[0], "message": self.error[1]} if self.error else None,
            "transcript": list(self.transcript),
        }


async def _noop_emit(event: str, payload: dict) -> None:
    return None


class SearchPipeline:
    """Owns the gateway, search sources, cache, and config for a deployment;
    run() executes one isolated session."""

    def __init__(
        self,
        gateway: Gateway,
        sources: Sequence[SearchSource],
        cfg: PipelineConfig,
        cache: Optional[DocumentCache] = None,
        crossmodal: Optional[CrossmodalScorer] = None,
    ):
        self.gateway = gateway
        self.sources = list(sources)
        self.cfg = cfg
        self.cache = cache
        self.crossmodal = crossmodal

    async def analyze(self, query: str) -> IntentAnalysis:
        return await analyze_intent(query, self.gateway)

    async def run(
        self,
        query: str,
        ctx: Optional[UserContext] = None,
        chosen_option: Optional[str] = None,
        emit: Optional[EmitCallback] = None,
    ) -> SearchSession:
        ctx = ctx or UserContext()
        outer_emit = emit or _noop_emit
        session = SearchSession(
            session_id=uuid.uuid4().hex[:12],
            original_query=query,
            user_context=ctx,
            created_at=time.time(),
            chosen_option=chosen_option,
        )

        async def emit_event(event: str, payload: dict) -> None:
            session.transcript.append({"type": event, **payload})
            await outer_emit(event, payload)

        def mark(entry: dict) -> None:
            session.transcript.append(entry)

        try:
            await self._run_inner(session, query, ctx, chosen_option, emit_event, mark)
        except PipelineError as exc:
            session.error = (exc.code, str(exc))
            await emit_event("error", {"code": exc.code, "message": str(exc)})
        except Exception as exc:  # keep partial results in the session log
            logger.exception("session %s failed", session.session_id)
            session.error = ("INTERNAL", str(exc))
            await emit_event("error", {"code": "INTERNAL", "message": str(exc)})
        return session

    async def _run_inner(
        self,
        session: SearchSession,
        query: str,
        ctx: UserContext,
        chosen_option: Optional[str],
        emit: EmitCallback,
        mark: Callable[[dict], None],
    ) -> None:
        cfg = self.cfg
        stage_start = time.perf_counter()

        # ---- preprocess -----------------------------------------------------
        if not query or not query.strip():
            raise PipelineError("EMPTY_QUERY", "query must be non-empty")
        intent = await analyze_intent(query, self.gateway)
        session.intent = intent
        if intent.refusal:
            session.timings["preprocess"] = time.perf_counter() - stage_start
            raise PipelineError(
                "REFUSED", f"{REFUSAL_MESSAGE} (category: {intent.refusal_category})"
            )
        effective = query.strip()
        if chosen_option:
            effective = f"{effective} ({chosen_option.strip()})"
        elif intent.needs_clarification:
            session.warn("clarification suggested but no option chosen; proceeding")
        rewritten = await rewrite_query(effective, ctx, self.gateway)
        session.rewritten_query = rewritten
        session.timings["preprocess"] = time.perf_counter() - stage_start

        # ---- planning -------------------------------------------------------
        stage_start = time.perf_counter()
        qdg = await build_qdg(rewritten, self.gateway, cfg)
        session.qdg = qdg
        session.timings["planning"] = time.perf_counter() - stage_start
        await emit(
            "meta",
            {
                "session_id": session.session_id,
                "query": session.original_query,
                "rewritten_query": rewritten,
                "qdg": {
                    "nodes": [{"id": n.id, "query": n.sub_query} for n in qdg.nodes],
                    "edges": [[p, c] for p, c in qdg.edges],
                },
            },
        )

        # ---- retrieval + ranking ---------------------------------------------
        stage_start = time.perf_counter()
        await self._retrieve_all(session, qdg)
        session.timings["retrieval"] = time.perf_counter() - stage_start
        if not session.documents:
            raise PipelineError("RETRIEVAL_EMPTY", "no documents retrieved for any sub-query")

        # ---- per-node generation ---------------------------------------------
        stage_start = time.perf_counter()
        for layer in topo_layers(qdg):
            await asyncio.gather(*(self._answer_one(session, qdg, node, emit) for node in layer))
        session.timings["generation"] = time.perf_counter() - stage_start

        # ---- presentation: synthesis + citations + timeline + images ----------
        stage_start = time.perf_counter()
        timeline_task = asyncio.ensure_future(self._build_timeline(session))
        images_task = asyncio.ensure_future(self._filter_images(session))

        worker = CitationWorker(
            session.documents,
            self.gateway,
            cfg,
            on_event=lambda e: emit("citation", citation_event_to_dict(e)),
        )
        worker.start()

        sentence_counter = 0

        async def on_answer_delta(delta: str) -> None:
            await emit("answer", {"delta": delta})

        async def on_answer_sentence(sentence: str, start: int, end: int) -> None:
            nonlocal sentence_counter
            mark({"type": "sentence_end", "index": sentence_counter, "end": end})
            sentence_counter += 1
            await worker.submit(sentence, start, end)

        final_stream = await self._synthesize(session, qdg, on_answer_delta, on_answer_sentence)
        session.final_answer = final_stream
        session.citation_events = await worker.drain()

        session.timeline_groups = await timeline_task
        await emit(
            "timeline",
            {"groups": [timeline_group_to_dict(g) for g in session.timeline_groups]},
        )

        filtered = await images_task
        session.image_placements = await self._place_images(session, filtered)
        await emit(
            "images",
            {"placements": [placement_to_dict(p) for p in session.image_placements]},
        )
        session.timings["presentation"] = time.perf_counter() - stage_start

        failed_nodes = [n.id for n in qdg.nodes if n.failed]
        await emit(
            "done",
            {
                "stats": {
                    "timings": dict(session.timings),
                    "documents": len(session.documents),
                    "nodes": len(qdg.nodes),
                    "failed_nodes": failed_nodes,
                    "sentences": len(final_stream.sentence_boundaries),
                    "citations": sum(
                        1 for e in session.citation_events if e.doc_index is not None
                    ),
                    "timeline_events": sum(
                        len(g.events) for g in session.timeline_groups
                    ),
                    "image_placements": len(session.image_placements),
                }
            },
        )

    # ---- retrieval internals --------------------------------------------------

    async def _retrieve_all(self, session: SearchSession, qdg: QDG) -> None:
        cfg = self.cfg
        nodes = qdg.nodes

        expansions = await asyncio.gather(
            *(expand_query(n.sub_query, self.gateway, cfg) for n in nodes)
        )
        hit_outcomes = await asyncio.gather(
            *(fetch_multi_source(expansions[i], self.sources, cfg) for i in range(len(nodes))),
            return_exceptions=True,
        )
        hits_per_node = []
        for node, outcome in zip(nodes, hit_outcomes):
            if isinstance(outcome, BaseException):
                if isinstance(outcome, RetrievalError):
                    session.warn(f"retrieval failed for node {node.id!r}: {outcome}")
                    hits_per_node.append([])
                else:
                    raise outcome
            else:
                hits_per_node.append(outcome)

        # deterministic admission order: (node order, merged hit order)
        url_order: list[str] = []
        url_hit: dict[str, object] = {}
        seen: set[str] = set()
        for hits in hits_per_node:
            for hit in hits:
                if hit.url not in seen:
                    seen.add(hit.url)
                    url_order.append(hit.url)
                    url_hit[hit.url] = hit

        source_by_id = {s.source_id: s for s in self.sources}
        limiter = asyncio.Semaphore(16)

        async def fetch_one(url: str) -> Optional[RetrievedDocument]:
            if self.cache is not None:
                cached = self.cache.lookup(url)
                if cached is not None:
                    return cached
            hit = url_hit[url]
            source = source_by_id.get(hit.source_id, self.sources[0])
            async with limiter:
                try:
                    raw = await asyncio.wait_for(
                        source.fetch_page(url), timeout=cfg.per_source_timeout
                    )
                except Exception as exc:
                    session.warn(f"page fetch failed for {url}: {exc}")
                    return None
            doc = clean_document(raw, url)
            if doc is None:
                session.warn(f"document discarded (empty after filtering): {url}")
                return None
            if self.cache is not None:
                self.cache.store(url, doc)
            return doc

        fetched = await asyncio.gather(*(fetch_one(url) for url in url_order))

        doc_index_by_url: dict[str, int] = {}
        chunks_by_doc: dict[int, list[Passage]] = {}
        for url, doc in zip(url_order, fetched):
            if doc is None:
                continue
            index = len(session.documents) + 1
            hit = url_hit[url]
            admitted = replace(
                doc,
                doc_index=index,
                source_id=hit.source_id,
                rank_in_source=hit.rank_in_source,
                images=tuple(replace(img, parent_doc=index) for img in doc.images),
            )
            session.documents.append(admitted)
            doc_index_by_url[url] = index
            chunks_by_doc[index] = chunk_text(admitted.clean_text, cfg, parent_doc=index)

        session.selected_passages = {}

        async def rank_one(node: Node, hits) -> None:
            passages: list[Passage] = []
            for hit in hits:
                index = doc_index_by_url.get(hit.url)
                if index is not None:
                    passages.extend(chunks_by_doc[index])
            if not passages:
                session.node_contexts[node.id] = RankedContext(subquery=node.id, passages=())
                session.selected_passages[node.id] = []
                return
            embeddings = await self.gateway.embed([p.text for p in passages])
            deduped = deduplicate(passages, embeddings, cfg)
            ks = await extract_keywords(node.sub_query, self.gateway)
            selected = select_passages(deduped, ks, cfg)
            session.selected_passages[node.id] = selected
            reranked = await rerank_passages(node.sub_query, selected, self.gateway, cfg)
            session.node_contexts[node.id] = RankedContext(
                subquery=node.id, passages=tuple(reranked)
            )

        await asyncio.gather(
            *(rank_one(node, hits_per_node[i]) for i, node in enumerate(nodes))
        )

    # ---- generation internals --------------------------------------------------

    async def _answer_one(
        self, session: SearchSession, qdg: QDG, node: Node, emit: EmitCallback
    ) -> None:
        qas = []
        for ancestor in ancestors(qdg, node.id):
            if ancestor.failed:
                continue  # degraded: descendants proceed with available answers
            if ancestor.answer is None:
                raise RuntimeError(
                    f"scheduler bug: ancestor {ancestor.id!r} of {node.id!r} has no answer"
                )
            qas.append((ancestor.sub_query, ancestor.answer))
        context = session.node_contexts.get(node.id) or RankedContext(node.id, ())
        prompt = build_node_prompt(node.sub_query, qas, [p.text for p in context.passages])

        async def on_delta(delta: str) -> None:
            await emit("node_answer", {"node": node.id, "delta": delta})

        stream = await answer_node(prompt, self.gateway, node_id=node.id, on_delta=on_delta)
        session.node_answers[node.id] = stream
        if stream.failed:
            node.failed = True
            node.answer = stream.text or None
            session.warn(f"generation failed for node {node.id!r}; marked failed")
        else:
            node.answer = stream.text

    async def _synthesize(
        self,
        session: SearchSession,
        qdg: QDG,
        on_delta,
        on_sentence,
    ) -> AnswerStream:
        if qdg.is_terminal:
            node = qdg.nodes[0]
            stream = session.node_answers.get(node.id)
            if stream is None or (stream.failed and not stream.text):
                raise PipelineError("GENERATION_UNAVAILABLE", "the only node failed to answer")
            return await synthesize_final(
                qdg.root_query,
                [],
                self.gateway,
                terminal_stream=stream,
                on_delta=on_delta,
                on_sentence=on_sentence,
            )
        depth = {}
        for layer_index, layer in enumerate(topo_layers(qdg)):
            for n in layer:
                depth[n.id] = layer_index
        position = {n.id: i for i, n in enumerate(qdg.nodes)}
        leaves = sorted(qdg.leaves(), key=lambda n: (depth[n.id], position[n.id]))
        leaf_qas = [
            (leaf.sub_query, leaf.answer)
            for leaf in leaves
            if not leaf.failed and leaf.answer
        ]
        if not leaf_qas:
            raise PipelineError("GENERATION_UNAVAILABLE", "all leaf nodes failed")
        if len(leaf_qas) < len(leaves):
            session.warn("one or more leaf nodes failed; synthesizing from survivors")
        return await synthesize_final(
            qdg.root_query,
            leaf_qas,
            self.gateway,
            on_delta=on_delta,
            on_sentence=on_sentence,
        )

    # ---- presentation internals --------------------------------------------------

    def _timeline_pool(self, session: SearchSession) -> list[Passage]:
        pool: dict[tuple[int, tuple[int, int]], Passage] = {}
        if session.qdg is None:
            return []
        for node in session.qdg.nodes:
            for passage in session.selected_passages.get(node.id, []):
                pool.setdefault((passage.parent_doc, passage.char_range), passage)
        return list(pool.values())

    async def _build_timeline(self, session: SearchSession) -> list[TimelineGroup]:
        pool = self._timeline_pool(session)
        if not pool:
            return []
        events = await extract_events(pool, session.documents, self.gateway)
        merged = await merge_events(events, self.gateway, self.cfg)
        if not merged:
            return []
        return await group_events(merged, self.gateway)

    async def _filter_images(self, session: SearchSession):
        images = [img for doc in session.documents for img in doc.images]
        if not images:
            return []
        return await filter_images(
            images,
            session.rewritten_query or session.original_query,
            self.gateway,
            self.cfg,
            docs=session.documents,
        )

    async def _place_images(self, session: SearchSession, images) -> list[ImagePlacement]:
        if not images or session.final_answer is None:
            return []
        paragraphs = [
            block.strip()
            for block in session.final_answer.text.split("\n\n")
            if block.strip()
        ]
        if not paragraphs:
            return []
        matrix = await placement_matrix(
            paragraphs,
            images,
            session.documents,
            self.gateway,
            self.cfg,
            crossmodal=self.crossmodal,
        )
        return assign_images(matrix, images, self.cfg)
