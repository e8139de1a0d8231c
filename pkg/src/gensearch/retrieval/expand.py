"""Query expansion: one sub-query becomes several retrieval queries."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from ..config import PipelineConfig
from ..gateway.base import Gateway, GenerationParams
from ..jsonparse import parse_model_json

logger = logging.getLogger(__name__)

EXPANSION_DIMENSIONS = (
    "content mastery",
    "key elements",
    "contextual analysis",
    "extended thinking",
)

_NUMBERED_LINE_RE = re.compile(r"^\s*(?:[-*•]|\d+[.)、])\s*(.+)$")


@dataclass(frozen=True)
class RetrievalQuery:
    text: str
    origin_subquery: str
    dimension: str  # "verbatim" or one of EXPANSION_DIMENSIONS


def _parse_questions(reply: str) -> list[str]:
    data = parse_model_json(reply)
    if isinstance(data, list):
        return [str(q).strip() for q in data if str(q).strip()]
    if isinstance(data, dict):
        for value in data.values():
            if isinstance(value, list):
                return [str(q).strip() for q in value if str(q).strip()]
    questions = []
    for line in reply.splitlines():
        m = _NUMBERED_LINE_RE.match(line)
        if m:
            questions.append(m.group(1).strip())
    return questions


def _dedup_key(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().lower())


async def expand_query(
    sub_query: str, gw: Gateway, cfg: PipelineConfig
) -> list[RetrievalQuery]:
    """The verbatim sub-query plus up to cfg.expansion_count expansions.

    Duplicates (case/whitespace-insensitive, including of the original)
    are dropped; an unparseable reply degrades to the verbatim query only.
    """
    if not sub_query.strip():
        raise ValueError("sub_query must be non-empty")
    from ..prompts import build_expansion_prompt

    out = [RetrievalQuery(text=sub_query, origin_subquery=sub_query, dimension="verbatim")]
    try:
        reply = await gw.chat_text(
            build_expansion_prompt(sub_query, cfg.expansion_count),
            GenerationParams(temperature=0.7),
            template_id="query_expansion",
        )
    except Exception as exc:
        logger.warning("expansion call failed for %r: %s", sub_query, exc)
        return out
    questions = _parse_questions(reply)
    if not questions:
        logger.warning("expansion reply unparseable for %r; verbatim only", sub_query)
        return out
    seen = {_dedup_key(sub_query)}
    for i, question in enumerate(questions):
        if len(out) - 1 >= cfg.expansion_count:
            break
        key = _dedup_key(question)
        if key in seen:
            continue
        seen.add(key)
        dimension = EXPANSION_DIMENSIONS[i % len(EXPANSION_DIMENSIONS)]
        out.append(
            RetrievalQuery(text=question, origin_subquery=sub_query, dimension=dimension)
        )
    return out
