"""Timeline construction: event extraction, near-duplicate merging, grouping.

Merging embeds each event's title+summary and scans events in ascending
timestamp order, keeping an event iff its cosine to every already-kept
event stays at or below the merge threshold — so of any conflicting pair
the later-timestamped event is the one discarded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from ..config import PipelineConfig
from ..gateway.base import Gateway, GenerationParams
from ..jsonparse import as_str_list, parse_model_json
from ..models import Passage, RetrievedDocument
from ..prompts import build_event_prompt, build_grouping_prompt
from ..textutil import parse_timestamp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimelineEvent:
    timestamp: datetime
    title: str
    summary: str
    source_passage: tuple[int, tuple[int, int]]  # (doc_index, char_range)
    time_source: str  # "passage" | "report_time"

    def merged_text(self) -> str:
        return f"{self.title} {self.summary}".strip()


@dataclass(frozen=True)
class TimelineGroup:
    label: str
    keywords: tuple[str, ...]
    events: tuple[TimelineEvent, ...]


async def extract_events(
    passages: Sequence[Passage],
    docs: Sequence[RetrievedDocument],
    gw: Gateway,
) -> list[TimelineEvent]:
    """One extraction call per post-selection passage.

    Passage-mentioned times win; a dateless passage borrows its document's
    report time; with neither the passage is discarded. Per-passage
    failures skip just that passage.
    """
    report_times = {d.doc_index: d.report_time for d in docs}
    events: list[TimelineEvent] = []
    params = GenerationParams(temperature=0.0)
    for passage in passages:
        try:
            reply = await gw.chat_text(
                build_event_prompt(passage.text), params, template_id="event_extraction"
            )
        except Exception as exc:
            logger.warning("event extraction failed for a passage: %s", exc)
            continue
        data = parse_model_json(reply)
        if not isinstance(data, dict):
            continue
        title = str(data.get("Title") or "").strip()
        summary = str(data.get("Summary") or "").strip()
        if not title and not summary:
            continue
        if not title:
            title = summary[:60]
        timestamp = parse_timestamp(str(data.get("Time") or ""))
        time_source = "passage"
        if timestamp is None:
            timestamp = report_times.get(passage.parent_doc)
            time_source = "report_time"
        if timestamp is None:
            continue  # no temporal information anywhere: discard
        events.append(
            TimelineEvent(
                timestamp=timestamp,
                title=title,
                summary=summary,
                source_passage=(passage.parent_doc, passage.char_range),
                time_source=time_source,
            )
        )
    return events


async def merge_events(
    events: Sequence[TimelineEvent],
    gw: Gateway,
    cfg: PipelineConfig,
) -> list[TimelineEvent]:
    """Drop near-duplicates, keeping the earlier-timestamped event."""
    if not events:
        return []
    order = sorted(range(len(events)), key=lambda i: (events[i].timestamp, i))
    embeddings = await gw.embed([events[i].merged_text() for i in order])
    matrix = np.stack([e.values for e in embeddings])
    kept: list[int] = []  # positions into `order`
    for pos in range(len(order)):
        if kept:
            sims = matrix[kept] @ matrix[pos]
            if float(np.max(sims)) > cfg.timeline_merge_threshold:
                continue
        kept.append(pos)
    return [events[order[pos]] for pos in kept]


async def group_events(
    events: Sequence[TimelineEvent],
    gw: Gateway,
) -> list[TimelineGroup]:
    """LLM-proposed grouping, repaired into a true partition.

    Unknown event indices are dropped, duplicates keep their first group,
    orphans land in an "Other" group; an unparseable reply yields a single
    chronological group. Groups are ordered by their earliest event.
    """
    if not events:
        raise ValueError("group_events requires at least one event")
    descriptors = [
        (e.timestamp.isoformat(), e.title, e.summary) for e in events
    ]
    data = None
    try:
        reply = await gw.chat_text(
            build_grouping_prompt(descriptors),
            GenerationParams(temperature=0.0),
            template_id="event_grouping",
        )
        data = parse_model_json(reply)
    except Exception as exc:
        logger.warning("event grouping call failed: %s", exc)

    groups_raw = data.get("groups") if isinstance(data, dict) else None
    chronological = sorted(events, key=lambda e: e.timestamp)
    if not isinstance(groups_raw, list) or not groups_raw:
        return [TimelineGroup(label="All events", keywords=(), events=tuple(chronological))]

    assigned: set[int] = set()
    groups: list[TimelineGroup] = []
    for raw in groups_raw:
        if not isinstance(raw, dict):
            continue
        label = str(raw.get("label") or "Group").strip() or "Group"
        keywords = tuple(as_str_list(raw.get("keywords")))
        member_indices = []
        for value in raw.get("events") or []:
            try:
                idx = int(value)
            except (TypeError, ValueError):
                continue
            if 0 <= idx < len(events) and idx not in assigned:
                assigned.add(idx)
                member_indices.append(idx)
        if member_indices:
            members = sorted(
                (events[i] for i in member_indices), key=lambda e: e.timestamp
            )
            groups.append(TimelineGroup(label=label, keywords=keywords, events=tuple(members)))
    orphans = [events[i] for i in range(len(events)) if i not in assigned]
    if orphans:
        orphans.sort(key=lambda e: e.timestamp)
        groups.append(TimelineGroup(label="Other", keywords=(), events=tuple(orphans)))
    if not groups:
        return [TimelineGroup(label="All events", keywords=(), events=tuple(chronological))]
    groups.sort(key=lambda g: g.events[0].timestamp)
    return groups
