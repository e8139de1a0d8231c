"""Passage deduplication, selection, and rerank ordering.

Dedup is a greedy scan in retrieval-rank order: a passage is kept iff its
cosine similarity to every previously kept passage stays below the
threshold. That yields a maximal (not maximum — optimal would be NP-hard)
independent set in the >=threshold conflict graph, and higher-ranked hits
win collisions.

Selection scores each passage as
``alpha * KF_hat + (1 - alpha) * TFIDF_hat`` where KF is keyword
occurrences per token, TFIDF(p) = sum_k tf(k, p) * log((1+N) / (1+df(k)))
over the current sub-query's passage set, and both components are
max-normalized to [0, 1] (0 when the max is 0). The top
``ceil(selection_ratio * n)`` passages survive, minimum one, ties broken
by original order. Stopwords are removed from scorer inputs only; stored
passage text is never touched.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .config import PipelineConfig
from .gateway.base import Gateway, GenerationParams
from .jsonparse import as_str_list, parse_model_json
from .models import Embedding, Passage
from .prompts import build_keyword_prompt
from .textutil import content_tokens, stopwords, tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KeywordSet:
    keywords: tuple[str, ...]
    source_subquery: str = ""


@dataclass(frozen=True)
class RankedContext:
    subquery: str
    passages: tuple[Passage, ...]


def deduplicate(
    passages: Sequence[Passage],
    embeddings: Sequence[Embedding],
    cfg: PipelineConfig,
) -> list[Passage]:
    """Greedy independent-set dedup; input order is retrieval-rank order."""
    if len(passages) != len(embeddings):
        raise ValueError("one embedding per passage required")
    if not passages:
        return []
    matrix = np.stack([e.values for e in embeddings])
    kept_rows: list[int] = []
    for i in range(len(passages)):
        if kept_rows:
            sims = matrix[kept_rows] @ matrix[i]
            if float(np.max(sims)) >= cfg.dedup_threshold:
                continue
        kept_rows.append(i)
    return [replace(passages[i], embedding=embeddings[i]) for i in kept_rows]


async def extract_keywords(sub_query: str, gw: Gateway) -> KeywordSet:
    """LLM keyword extraction with a stopword-filtered token fallback."""
    if not sub_query.strip():
        raise ValueError("sub_query must be non-empty")
    keywords: list[str] = []
    try:
        reply = await gw.chat_text(
            build_keyword_prompt(sub_query),
            GenerationParams(temperature=0.0),
            template_id="keyword_extraction",
        )
        data = parse_model_json(reply)
        if isinstance(data, list):
            keywords = as_str_list(data)
        elif isinstance(data, dict):
            for value in data.values():
                if isinstance(value, list):
                    keywords.extend(as_str_list(value))
    except Exception as exc:
        logger.warning("keyword extraction failed for %r: %s", sub_query, exc)
    keywords = [k.strip().lower() for k in keywords if k.strip()]
    if not keywords:
        keywords = content_tokens(sub_query)
    return KeywordSet(keywords=tuple(dict.fromkeys(keywords)), source_subquery=sub_query)


def _scorer_tokens(text: str) -> list[str]:
    return [t for t in tokenize(text) if t not in stopwords()]


def _count_occurrences(tokens: list[str], needle: list[str]) -> int:
    if not needle or len(needle) > len(tokens):
        return 0
    if len(needle) == 1:
        return tokens.count(needle[0])
    count = 0
    first = needle[0]
    for i in range(len(tokens) - len(needle) + 1):
        if tokens[i] == first and tokens[i : i + len(needle)] == needle:
            count += 1
    return count


def selection_scores(
    passages: Sequence[Passage], ks: KeywordSet, cfg: PipelineConfig
) -> list[float]:
    """The weighted keyword-frequency / TF-IDF score per passage."""
    keyword_tokens = [_scorer_tokens(k) or tokenize(k) for k in ks.keywords]
    keyword_tokens = [k for k in keyword_tokens if k]
    passage_tokens = [_scorer_tokens(p.text) for p in passages]
    n = len(passages)

    kf = []
    counts_per_keyword: list[list[int]] = []
    for tokens in passage_tokens:
        counts = [_count_occurrences(tokens, k) for k in keyword_tokens]
        counts_per_keyword.append(counts)
        kf.append(sum(counts) / len(tokens) if tokens else 0.0)

    df = [0] * len(keyword_tokens)
    for counts in counts_per_keyword:
        for j, c in enumerate(counts):
            if c > 0:
                df[j] += 1
    tfidf = []
    for counts in counts_per_keyword:
        tfidf.append(
            sum(c * math.log((1 + n) / (1 + df[j])) for j, c in enumerate(counts))
        )

    def max_normalize(values: list[float]) -> list[float]:
        top = max(values, default=0.0)
        if top <= 0:
            return [0.0] * len(values)
        return [v / top for v in values]

    kf_hat = max_normalize(kf)
    tfidf_hat = max_normalize(tfidf)
    alpha = cfg.selection_alpha
    return [alpha * k + (1 - alpha) * t for k, t in zip(kf_hat, tfidf_hat)]


def select_passages(
    passages: Sequence[Passage], ks: KeywordSet, cfg: PipelineConfig
) -> list[Passage]:
    """Keep the top ceil(selection_ratio * n) passages by relevance score."""
    if not passages:
        raise ValueError("select_passages needs at least one passage")
    scores = selection_scores(passages, ks, cfg)
    keep = max(1, math.ceil(cfg.selection_ratio * len(passages)))
    order = sorted(range(len(passages)), key=lambda i: (-scores[i], i))
    chosen = sorted(order[:keep])
    return [replace(passages[i], selection_score=scores[i]) for i in chosen]


async def rerank_passages(
    sub_query: str,
    passages: Sequence[Passage],
    gw: Gateway,
    cfg: PipelineConfig,
) -> list[Passage]:
    """Order passages by reranker relevance, highest first, stable on ties.

    A gateway failure keeps the selection order with selection scores as
    the recorded rerank scores (degraded mode).
    """
    if not passages:
        raise ValueError("rerank_passages needs at least one passage")
    try:
        scores = await gw.rerank_score(sub_query, [p.text for p in passages])
    except Exception as exc:
        logger.warning("rerank failed for %r, keeping selection order: %s", sub_query, exc)
        return [replace(p, rerank_score=p.selection_score) for p in passages]
    order = sorted(range(len(passages)), key=lambda i: (-scores[i], i))
    return [replace(passages[i], rerank_score=scores[i]) for i in order]


async def rank_context(
    sub_query: str,
    passages: Sequence[Passage],
    embeddings: Sequence[Embedding],
    gw: Gateway,
    cfg: PipelineConfig,
) -> RankedContext:
    """Full dedup -> select -> rerank chain for one sub-query."""
    deduped = deduplicate(passages, embeddings, cfg)
    if not deduped:
        return RankedContext(subquery=sub_query, passages=())
    ks = await extract_keywords(sub_query, gw)
    selected = select_passages(deduped, ks, cfg)
    reranked = await rerank_passages(sub_query, selected, gw, cfg)
    return RankedContext(subquery=sub_query, passages=tuple(reranked))
