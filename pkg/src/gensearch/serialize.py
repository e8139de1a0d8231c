"""JSON (de)serialization of domain objects for session logs, the cache,
and wire payloads."""

from __future__ import annotations

from datetime import datetime
from typing import Optional

from .models import ImageAsset, Passage, RetrievedDocument
from .presentation.choreography import ImagePlacement
from .presentation.citations import CitationEvent
from .presentation.timeline import TimelineEvent, TimelineGroup
from .textutil import parse_timestamp


def _time_to_str(value: Optional[datetime]) -> Optional[str]:
    return value.isoformat() if value else None


def image_to_dict(image: ImageAsset) -> dict:
    return {
        "url": image.url,
        "width": image.width,
        "height": image.height,
        "alt_text": image.alt_text,
        "caption": image.caption,
        "parent_doc": image.parent_doc,
    }


def image_from_dict(data: dict) -> ImageAsset:
    return ImageAsset(
        url=data["url"],
        width=data.get("width"),
        height=data.get("height"),
        alt_text=data.get("alt_text", ""),
        caption=data.get("caption"),
        parent_doc=data.get("parent_doc", 0),
    )


def document_to_dict(doc: RetrievedDocument) -> dict:
    return {
        "doc_index": doc.doc_index,
        "url": doc.url,
        "title": doc.title,
        "report_time": _time_to_str(doc.report_time),
        "clean_text": doc.clean_text,
        "images": [image_to_dict(img) for img in doc.images],
        "source_id": doc.source_id,
        "rank_in_source": doc.rank_in_source,
    }


def document_from_dict(data: dict) -> RetrievedDocument:
    return RetrievedDocument(
        doc_index=data.get("doc_index", 0),
        url=data["url"],
        title=data.get("title", ""),
        report_time=parse_timestamp(data.get("report_time")),
        clean_text=data.get("clean_text", ""),
        images=tuple(image_from_dict(i) for i in data.get("images", [])),
        source_id=data.get("source_id", ""),
        rank_in_source=data.get("rank_in_source", 0),
    )


def passage_to_dict(passage: Passage) -> dict:
    return {
        "parent_doc": passage.parent_doc,
        "char_range": list(passage.char_range),
        "text": passage.text,
        "selection_score": passage.selection_score,
        "rerank_score": passage.rerank_score,
    }


def citation_event_to_dict(event: CitationEvent) -> dict:
    return {
        "sentence_index": event.sentence_index,
        "start": event.char_range[0],
        "end": event.char_range[1],
        "doc_index": event.doc_index,
        "method": event.method,
    }


def timeline_event_to_dict(event: TimelineEvent) -> dict:
    return {
        "time": event.timestamp.isoformat(),
        "title": event.title,
        "summary": event.summary,
        "doc_index": event.source_passage[0],
        "char_range": list(event.source_passage[1]),
        "time_source": event.time_source,
    }


def timeline_group_to_dict(group: TimelineGroup) -> dict:
    return {
        "label": group.label,
        "keywords": list(group.keywords),
        "events": [timeline_event_to_dict(e) for e in group.events],
    }


def placement_to_dict(placement: ImagePlacement) -> dict:
    return {
        "paragraph_index": placement.paragraph_index,
        "url": placement.image.url,
        "alt_text": placement.image.alt_text,
        "caption": placement.image.caption,
        "doc_index": placement.image.parent_doc,
        "score": placement.score,
    }
