"""Query preprocessing: safety screening, disambiguation, geo-temporal rewriting.

The safety/clarification replies use the fixed JSON key names of the wire
format: "Refusal", "Category", "Requires additional input",
"Additional options", "Prompt description", "Choices".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from .gateway.base import Gateway, GenerationParams
from .jsonparse import as_bool, as_str_list, parse_model_json
from .prompts import build_intent_clarify_prompt, build_intent_refusal_prompt, build_rewrite_prompt

logger = logging.getLogger(__name__)

REFUSAL_CATEGORIES = (
    "illegal content",
    "ethical violations",
    "privacy breaches",
    "harmful intent",
    "professional consultations",
    "human-AI interactions",
    "misinformation",
    "technical inquiries",
    "academic requests",
    "planning and consulting inquiries",
    "creative content generation",
)

_PARSE_RETRIES = 2


@dataclass(frozen=True)
class IntentAnalysis:
    refusal: bool = False
    refusal_category: Optional[str] = None
    needs_clarification: bool = False
    clarification_prompt: Optional[str] = None
    options: tuple[str, ...] = ()


@dataclass(frozen=True)
class UserContext:
    local_time: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    location: Optional[str] = None
    language: str = "en"


def normalize_category(raw: str) -> str:
    """Map a model-emitted category onto the known taxonomy when possible;
    unknown labels are kept verbatim rather than dropping the refusal."""
    cleaned = raw.strip().lower()
    for category in REFUSAL_CATEGORIES:
        if cleaned == category or cleaned in category or category in cleaned:
            return category
    return raw.strip()


async def _chat_json(gw: Gateway, prompt: str, template_id: str) -> Optional[dict]:
    params = GenerationParams(temperature=0.0)
    for _ in range(_PARSE_RETRIES + 1):
        reply = await gw.chat_text(prompt, params, template_id=template_id)
        data = parse_model_json(reply)
        if isinstance(data, dict):
            return data
    return None


async def analyze_intent(query: str, gw: Gateway) -> IntentAnalysis:
    """Classify the query for refusal, then (when allowed) for ambiguity.

    Unparseable model output fails open: the query proceeds to search.
    Refusal takes precedence over clarification and short-circuits the
    second call.
    """
    if not query or not query.strip():
        raise ValueError("query must be non-empty")
    query = query.strip()

    refusal_data = await _chat_json(gw, build_intent_refusal_prompt(query), "intent_refusal")
    if refusal_data is None:
        logger.warning("intent refusal reply unparseable; failing open to search")
    elif as_bool(refusal_data.get("Refusal")):
        raw_category = str(refusal_data.get("Category") or "").strip()
        category = normalize_category(raw_category) if raw_category else REFUSAL_CATEGORIES[3]
        return IntentAnalysis(refusal=True, refusal_category=category)

    clarify_data = await _chat_json(gw, build_intent_clarify_prompt(query), "intent_clarify")
    if clarify_data is None:
        logger.warning("intent clarify reply unparseable; failing open to search")
        return IntentAnalysis()
    if not as_bool(clarify_data.get("Requires additional input")):
        return IntentAnalysis()
    extra = clarify_data.get("Additional options") or {}
    if not isinstance(extra, dict):
        extra = {}
    choices = tuple(as_str_list(extra.get("Choices")))
    if not choices:
        # clarification without options is unusable by the UI round-trip
        return IntentAnalysis()
    prompt_text = str(extra.get("Prompt description") or "Please select an option")
    return IntentAnalysis(
        needs_clarification=True,
        clarification_prompt=prompt_text,
        options=choices,
    )


async def rewrite_query(query: str, ctx: UserContext, gw: Gateway) -> str:
    """Resolve geo-temporal references using the user context.

    Empty or unparseable model output returns the input query unchanged.
    """
    prompt = build_rewrite_prompt(
        query,
        local_time=ctx.local_time.isoformat(),
        location=ctx.location or "",
    )
    reply = await gw.chat_text(
        prompt, GenerationParams(temperature=0.0), template_id="query_rewrite"
    )
    rewritten = reply.strip().strip('"').strip()
    if not rewritten:
        return query
    # a reply that obviously isn't a query (e.g. a JSON blob) is discarded
    if rewritten.startswith("{") or rewritten.startswith("["):
        logger.warning("rewrite reply does not look like a query; keeping original")
        return query
    return rewritten
