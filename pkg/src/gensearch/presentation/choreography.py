"""Textual-visual choreography: filter candidate images, score
paragraph-image pairs, and solve the one-to-one placement.

The pair score is a weighted average of three [0,1] components: a
cross-modal paragraph-image similarity (cosine mapped from [-1,1] via
(x+1)/2), the reranker similarity between the paragraph and the image's
parent-document title, and the embedding cosine between the paragraph and
the parent-document text (clamped at 0). Without a cross-modal provider
its weight is redistributed proportionally onto the other two.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Awaitable, Callable, Optional, Sequence

import numpy as np

from ..config import PipelineConfig
from ..gateway.base import Gateway
from ..models import ImageAsset, RetrievedDocument, cosine_similarity
from .hungarian import max_weight_assignment

logger = logging.getLogger(__name__)

_NOISE_RE = re.compile(r"logo|icon|sprite|avatar|favicon", re.IGNORECASE)

# signature of an optional cross-modal scorer: (paragraph, image) -> cosine in [-1, 1]
CrossmodalScorer = Callable[[str, ImageAsset], Awaitable[float]]


@dataclass(frozen=True)
class ImagePlacement:
    paragraph_index: int
    image: ImageAsset
    score: float


def _passes_rules(image: ImageAsset, cfg: PipelineConfig) -> bool:
    if _NOISE_RE.search(image.url) or _NOISE_RE.search(image.alt_text or ""):
        return False
    # dimension rules are skipped when the size is unknown
    if image.width and image.height:
        if min(image.width, image.height) < cfg.image_min_side:
            return False
        aspect = image.width / image.height
        if aspect > cfg.image_aspect_limit or aspect < 1.0 / cfg.image_aspect_limit:
            return False
    return True


async def filter_images(
    images: Sequence[ImageAsset],
    main_query: str,
    gw: Gateway,
    cfg: PipelineConfig,
    docs: Sequence[RetrievedDocument] = (),
) -> list[ImageAsset]:
    """Rule pass (resolution, aspect ratio, logo/icon patterns), then a
    relevance pass keeping images whose textual description scores at
    least the relevance threshold against the main query."""
    titles = {d.doc_index: d.title for d in docs}
    survivors: list[ImageAsset] = []
    descriptions: list[str] = []
    for image in images:
        if not _passes_rules(image, cfg):
            continue
        description = image.text_description() or titles.get(image.parent_doc, "")
        if not description.strip():
            continue  # nothing to score relevance against
        survivors.append(image)
        descriptions.append(description)
    if not survivors:
        return []
    scores = await gw.rerank_score(main_query, descriptions)
    return [
        image
        for image, score in zip(survivors, scores)
        if score >= cfg.image_relevance_threshold
    ]


def _redistribute(weights: tuple[float, float, float]) -> tuple[float, float, float]:
    w1, w2, w3 = weights
    rest = w2 + w3
    if rest <= 0:
        return (0.0, 0.5, 0.5)
    return (0.0, w2 + w1 * w2 / rest, w3 + w1 * w3 / rest)


async def placement_matrix(
    paragraphs: Sequence[str],
    images: Sequence[ImageAsset],
    docs: Sequence[RetrievedDocument],
    gw: Gateway,
    cfg: PipelineConfig,
    crossmodal: Optional[CrossmodalScorer] = None,
) -> np.ndarray:
    """Score matrix s[p, i] over paragraphs x images."""
    if not paragraphs or not images:
        raise ValueError("placement_matrix needs paragraphs and images")
    weights = cfg.image_weights
    if crossmodal is None:
        weights = _redistribute(weights)
        logger.info("cross-modal provider unavailable; weights redistributed to %s", weights)
    w1, w2, w3 = weights

    doc_by_index = {d.doc_index: d for d in docs}
    para_embeddings = await gw.embed(list(paragraphs))
    doc_texts = {}
    for image in images:
        doc = doc_by_index.get(image.parent_doc)
        doc_texts[image.parent_doc] = (doc.clean_text[:2000] if doc else image.text_description() or image.url)
    doc_keys = list(doc_texts)
    doc_embeddings = dict(zip(doc_keys, await gw.embed([doc_texts[k] for k in doc_keys])))

    matrix = np.zeros((len(paragraphs), len(images)))
    for p_idx, paragraph in enumerate(paragraphs):
        titles = []
        for image in images:
            doc = doc_by_index.get(image.parent_doc)
            titles.append((doc.title if doc and doc.title else image.text_description() or image.url))
        title_scores = await gw.rerank_score(paragraph, titles) if w2 > 0 else [0.0] * len(images)
        for i_idx, image in enumerate(images):
            component1 = 0.0
            if crossmodal is not None and w1 > 0:
                raw = await crossmodal(paragraph, image)
                component1 = (max(-1.0, min(1.0, raw)) + 1.0) / 2.0
            component2 = title_scores[i_idx]
            component3 = max(
                0.0,
                cosine_similarity(
                    para_embeddings[p_idx], doc_embeddings[image.parent_doc]
                ),
            )
            matrix[p_idx, i_idx] = w1 * component1 + w2 * component2 + w3 * component3
    return matrix


def assign_images(
    matrix: np.ndarray | Sequence[Sequence[float]],
    images: Sequence[ImageAsset],
    cfg: PipelineConfig,
) -> list[ImagePlacement]:
    """Maximum-weight one-to-one assignment via the Hungarian solver on the
    padded square cost matrix; dummy matches and pairs scoring below the
    placement floor are dropped."""
    rows = [list(map(float, row)) for row in np.asarray(matrix, dtype=float)]
    if not rows or not rows[0]:
        return []
    if len(rows[0]) != len(images):
        raise ValueError("matrix column count must equal the number of images")
    placements = []
    for p_idx, i_idx in max_weight_assignment(rows):
        score = rows[p_idx][i_idx]
        if score < cfg.image_placement_floor:
            continue
        placements.append(
            ImagePlacement(paragraph_index=p_idx, image=images[i_idx], score=score)
        )
    return placements
