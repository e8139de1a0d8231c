"""Shared domain types and vector arithmetic.

All types here are immutable value objects; they are shared freely across
concurrent pipeline stages without synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence

import numpy as np


class DimensionMismatchError(ValueError):
    """Cosine similarity between embeddings of different dimensions."""


class Embedding:
    """A fixed-length real vector, stored L2-normalized.

    Normalizing at construction makes cosine similarity a plain dot
    product, which keeps the pairwise loops in dedup cheap.
    """

    __slots__ = ("values",)

    def __init__(self, values: Sequence[float] | np.ndarray):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("embedding must be a non-empty 1-d vector")
        norm = float(np.linalg.norm(arr))
        if norm > 0:
            arr = arr / norm
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Embedding is immutable")

    @property
    def dimension(self) -> int:
        return int(self.values.size)

    def __repr__(self) -> str:
        return f"Embedding(dim={self.dimension})"


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Cosine similarity in [-1, 1]; embeddings are pre-normalized."""
    if a.dimension != b.dimension:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.dimension} vs {b.dimension}"
        )
    return float(np.clip(np.dot(a.values, b.values), -1.0, 1.0))


@dataclass(frozen=True)
class ImageAsset:
    url: str
    width: Optional[int] = None
    height: Optional[int] = None
    alt_text: str = ""
    caption: Optional[str] = None
    parent_doc: int = 0

    def text_description(self) -> str:
        """Alt/caption text used for relevance scoring."""
        parts = [p for p in (self.alt_text, self.caption) if p]
        return " ".join(parts)


@dataclass(frozen=True)
class RetrievedDocument:
    doc_index: int  # 1-based, unique within one query session
    url: str
    title: str = ""
    report_time: Optional[datetime] = None
    clean_text: str = ""
    images: tuple[ImageAsset, ...] = ()
    source_id: str = ""
    rank_in_source: int = 0


@dataclass(frozen=True)
class Passage:
    parent_doc: int
    char_range: tuple[int, int]  # [start, end) offsets into clean_text
    text: str
    embedding: Optional[Embedding] = None
    selection_score: float = 0.0
    rerank_score: float = 0.0

    def __post_init__(self):
        start, end = self.char_range
        if end <= start:
            raise ValueError(f"char_range must be non-empty, got {self.char_range}")
