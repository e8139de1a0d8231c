"""LLM-judge harness and the quantitative presentation metrics.

One facet per judge call, temperature 0; the judge returns
``{"Issues Identified", "Calculation Process", "Score"}`` and scores are
clamped to [0, 10]. Density/precision metrics are plain percentage
arithmetic over citation events and relevance judgments.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .gateway.base import Gateway, JUDGE_PARAMS
from .jsonparse import parse_model_json
from .prompts import build_judge_prompt, facet_definitions

logger = logging.getLogger(__name__)

FACETS = tuple(facet_definitions().keys())

_JUDGE_RETRIES = 2


class UndefinedMetricError(ValueError):
    """The metric is undefined for the given inputs (empty set, zero variance)."""


@dataclass(frozen=True)
class FacetScore:
    facet: str
    score: Optional[float]  # None when the judge reply never parsed
    issues: str = ""
    calc: str = ""

    @property
    def scored(self) -> bool:
        return self.score is not None


@dataclass(frozen=True)
class JudgmentRecord:
    item_id: str
    relevant: bool


async def judge_facet(
    query: str,
    answer: str,
    facet: str,
    gw: Gateway,
    current_date: str = "",
) -> FacetScore:
    """Score one answer on one facet; unparseable replies (after retries)
    yield an unscored FacetScore rather than an exception."""
    if facet not in FACETS:
        raise KeyError(f"unknown facet: {facet}")
    prompt = build_judge_prompt(facet, query, answer, current_date)
    for attempt in range(_JUDGE_RETRIES + 1):
        try:
            reply = await gw.chat_text(prompt, JUDGE_PARAMS, template_id="evaluation")
        except Exception as exc:
            logger.warning("judge call failed (%s attempt %d): %s", facet, attempt + 1, exc)
            continue
        data = parse_model_json(reply)
        if not isinstance(data, dict) or "Score" not in data:
            continue
        try:
            raw_score = float(data["Score"])
        except (TypeError, ValueError):
            continue
        score = max(0.0, min(10.0, raw_score))
        if score != raw_score:
            logger.warning("judge score %s clamped to %s for %s", raw_score, score, facet)
        return FacetScore(
            facet=facet,
            score=score,
            issues=str(data.get("Issues Identified", "")),
            calc=str(data.get("Calculation Process", "")),
        )
    logger.warning("judge reply never parsed; %s left unscored", facet)
    return FacetScore(facet=facet, score=None)


def citation_density(events: Sequence, sentence_count: int) -> float:
    """Percentage of sentences carrying a citation."""
    if sentence_count < 1:
        raise UndefinedMetricError("sentence_count must be >= 1")
    cited = sum(1 for e in events if getattr(e, "doc_index", None) is not None)
    return 100.0 * cited / sentence_count


def precision_metric(records: Sequence[JudgmentRecord]) -> float:
    """Percentage of relevant items; shared by citation/timeline/image precision."""
    if not records:
        raise UndefinedMetricError("precision over an empty record set is undefined")
    relevant = sum(1 for r in records if r.relevant)
    return 100.0 * relevant / len(records)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise ValueError("input lengths differ")
    n = len(xs)
    if n < 2:
        raise UndefinedMetricError("pearson needs at least 2 points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    var_x = sum(d * d for d in dx)
    var_y = sum(d * d for d in dy)
    if var_x == 0 or var_y == 0:
        raise UndefinedMetricError("pearson undefined for zero variance")
    cov = sum(a * b for a, b in zip(dx, dy))
    r = cov / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


async def run_eval_suite(
    results_dir: Path | str,
    facets: Sequence[str],
    gw: Gateway,
    current_date: str = "",
) -> dict:
    """Judge every session transcript in a directory on every facet.

    Transcripts are the service's session-log JSON files. The report
    contains per-item facet scores, per-facet means over scored items,
    and unscored counts; it is deterministic for a given stub + inputs.
    """
    results_dir = Path(results_dir)
    transcripts = sorted(results_dir.glob("*.json"))
    if not transcripts:
        raise FileNotFoundError(f"no transcripts found in {results_dir}")
    for facet in facets:
        if facet not in FACETS:
            raise KeyError(f"unknown facet: {facet}")

    items = []
    for path in transcripts:
        data = json.loads(path.read_text(encoding="utf-8"))
        query = data.get("original_query") or data.get("query") or ""
        answer = data.get("final_answer") or data.get("answer") or ""
        if not answer:
            logger.warning("transcript %s has no final answer; skipped", path.name)
            continue
        scores = {}
        for facet in facets:
            fs = await judge_facet(query, answer, facet, gw, current_date=current_date)
            scores[facet] = {"score": fs.score, "issues": fs.issues, "calc": fs.calc}
        items.append({"item": path.stem, "query": query, "facets": scores})

    means = {}
    unscored = {}
    for facet in facets:
        values = [
            it["facets"][facet]["score"]
            for it in items
            if it["facets"][facet]["score"] is not None
        ]
        means[facet] = sum(values) / len(values) if values else None
        unscored[facet] = sum(1 for it in items if it["facets"][facet]["score"] is None)
    return {
        "items": items,
        "facet_means": means,
        "unscored_counts": unscored,
        "item_count": len(items),
    }


def format_report_table(report: dict) -> str:
    """Human-readable summary table for a run_eval_suite report."""
    lines = [f"{'facet':<22} {'mean':>8} {'unscored':>9}"]
    for facet, mean in report["facet_means"].items():
        mean_text = f"{mean:.3f}" if mean is not None else "-"
        lines.append(f"{facet:<22} {mean_text:>8} {report['unscored_counts'][facet]:>9}")
    lines.append(f"items: {report['item_count']}")
    return "\n".join(lines)
