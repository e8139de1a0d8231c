"""Recursive character chunking with overlap.

Text is cut at the highest-priority separator available (blank line,
newline, sentence-final punctuation, space, single character) into
contiguous pieces, which are then re-merged into chunks of at most
``chunk_size`` characters with a target overlap of
``floor(chunk_size * chunk_overlap_ratio)`` characters — achieved exactly
when separator boundaries allow whole trailing pieces to be carried over.

Chunks carry [start, end) offsets into the source text; their union covers
the whole text and each chunk's text equals the source slice.
"""

from __future__ import annotations

import re

from ..config import PipelineConfig
from ..models import Passage

_SEPARATORS = (
    re.compile(r"\n{2,}"),        # blank line(s)
    re.compile(r"\n"),            # newline
    re.compile(r"[。！？.!?]+"),   # sentence-final punctuation run
    re.compile(r" +"),            # spaces
)
_CHAR_LEVEL = len(_SEPARATORS)


def _cut_points(text: str, start: int, end: int, level: int) -> list[int]:
    """Positions strictly inside (start, end) where a piece may end;
    separators attach to the preceding piece so coverage is preserved."""
    if level == _CHAR_LEVEL:
        return list(range(start + 1, end))
    cuts = []
    for match in _SEPARATORS[level].finditer(text, start, end):
        cut = match.end()
        if start < cut < end:
            cuts.append(cut)
    return cuts


def _split_pieces(
    text: str, start: int, end: int, level: int, chunk_size: int
) -> list[tuple[int, int]]:
    """Contiguous pieces of text[start:end], each at most chunk_size long."""
    if end - start <= chunk_size:
        return [(start, end)]
    for lvl in range(level, _CHAR_LEVEL + 1):
        cuts = _cut_points(text, start, end, lvl)
        if not cuts:
            continue
        bounds = [start] + cuts + [end]
        pieces: list[tuple[int, int]] = []
        for s, e in zip(bounds, bounds[1:]):
            if e - s > chunk_size:
                pieces.extend(_split_pieces(text, s, e, lvl + 1, chunk_size))
            else:
                pieces.append((s, e))
        return pieces
    return [(start, end)]  # unreachable: char level always cuts


def _merge_pieces(
    pieces: list[tuple[int, int]], chunk_size: int, overlap: int
) -> list[tuple[int, int]]:
    chunks: list[tuple[int, int]] = []
    window: list[tuple[int, int]] = []
    window_len = 0
    for piece in pieces:
        piece_len = piece[1] - piece[0]
        if window and window_len + piece_len > chunk_size:
            chunks.append((window[0][0], window[-1][1]))
            while window and (
                window_len > overlap or window_len + piece_len > chunk_size
            ):
                dropped = window.pop(0)
                window_len -= dropped[1] - dropped[0]
        window.append(piece)
        window_len += piece_len
    if window:
        chunks.append((window[0][0], window[-1][1]))
    return chunks


def chunk_ranges(text: str, chunk_size: int, overlap: int) -> list[tuple[int, int]]:
    if not text:
        raise ValueError("cannot chunk empty text")
    if len(text) <= chunk_size:
        return [(0, len(text))]
    pieces = _split_pieces(text, 0, len(text), 0, chunk_size)
    return _merge_pieces(pieces, chunk_size, overlap)


def chunk_text(clean_text: str, cfg: PipelineConfig, parent_doc: int = 0) -> list[Passage]:
    ranges = chunk_ranges(clean_text, cfg.chunk_size, cfg.chunk_overlap)
    return [
        Passage(parent_doc=parent_doc, char_range=(s, e), text=clean_text[s:e])
        for s, e in ranges
    ]
