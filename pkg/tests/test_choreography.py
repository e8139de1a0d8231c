import itertools
import random

import numpy as np
import pytest

from gensearch.config import PipelineConfig
from gensearch.models import Embedding, ImageAsset, RetrievedDocument
from gensearch.presentation.choreography import (
    ImagePlacement,
    assign_images,
    filter_images,
    placement_matrix,
)
from gensearch.presentation.hungarian import max_weight_assignment, solve_min_cost

from conftest import run


def _image(url="https://e.com/i.jpg", w=800, h=600, alt="a scene", doc=1, caption=None):
    return ImageAsset(url=url, width=w, height=h, alt_text=alt, caption=caption, parent_doc=doc)


class ScriptedGateway:
    """rerank returns scripted scores; embed returns prescribed vectors."""

    def __init__(self, rerank_scores=None, embed_map=None):
        self._rerank_scores = rerank_scores
        self._embed_map = embed_map or {}

    async def rerank_score(self, query, passages):
        if callable(self._rerank_scores):
            return self._rerank_scores(query, passages)
        return self._rerank_scores[: len(passages)]

    async def embed(self, texts):
        return [Embedding(self._embed_map.get(t, [1.0, 0.0])) for t in texts]


# -- rule + relevance filtering ----------------------------------------------------


def test_small_icon_dropped(cfg):
    images = [_image(url="https://e.com/tiny.png", w=64, h=64)]
    gw = ScriptedGateway(rerank_scores=[0.9])
    assert run(filter_images(images, "query", gw, cfg)) == []


def test_extreme_aspect_ratio_dropped(cfg):
    banner = _image(url="https://e.com/banner.jpg", w=1200, h=200)
    gw = ScriptedGateway(rerank_scores=[0.9])
    assert run(filter_images([banner], "query", gw, cfg)) == []


def test_logo_pattern_dropped(cfg):
    images = [
        _image(url="https://e.com/logo-header.jpg"),
        _image(url="https://e.com/photo.jpg", alt="site favicon image"),
    ]
    gw = ScriptedGateway(rerank_scores=[0.9, 0.9])
    assert run(filter_images(images, "query", gw, cfg)) == []


def test_relevance_boundary_is_strict_smaller_than(cfg):
    keep_031 = _image(url="https://e.com/a.jpg", alt="bridge photo one")
    keep_030 = _image(url="https://e.com/b.jpg", alt="bridge photo two")
    drop_029 = _image(url="https://e.com/c.jpg", alt="bridge photo three")
    gw = ScriptedGateway(rerank_scores=[0.31, 0.30, 0.29])
    kept = run(filter_images([keep_031, keep_030, drop_029], "bridge collapse", gw, cfg))
    assert [i.url for i in kept] == ["https://e.com/a.jpg", "https://e.com/b.jpg"]


def test_unknown_dimensions_skip_dimension_rules(cfg):
    mystery = _image(url="https://e.com/m.jpg", w=None, h=None, alt="described scene")
    gw = ScriptedGateway(rerank_scores=[0.5])
    kept = run(filter_images([mystery], "query", gw, cfg))
    assert kept == [mystery]


def test_undescribed_image_falls_back_to_doc_title(cfg):
    bare = _image(url="https://e.com/bare.jpg", alt="", doc=2)
    doc = RetrievedDocument(doc_index=2, url="https://e.com", title="City bridge rebuild")
    gw = ScriptedGateway(rerank_scores=[0.9])
    kept = run(filter_images([bare], "query", gw, cfg, docs=[doc]))
    assert kept == [bare]
    no_docs = run(filter_images([bare], "query", gw, cfg))
    assert no_docs == []  # nothing to score against


# -- placement matrix -----------------------------------------------------------------


def _doc(idx, title="Doc title", text="document body text"):
    return RetrievedDocument(doc_index=idx, url=f"https://e.com/{idx}", title=title, clean_text=text)


def _matrix_with_components(c1, c2, c3, weights):
    """One paragraph x one image with exact component values."""
    cfg = PipelineConfig(image_weights=weights)
    img = _image(doc=1)
    doc = _doc(1)
    # embed cosine: paragraph vec vs doc vec with cos = c3 (both unit)
    para_vec = [c3, float(np.sqrt(1 - c3 * c3))]
    gw = ScriptedGateway(
        rerank_scores=[c2],
        embed_map={"paragraph text": para_vec, doc.clean_text[:2000]: [1.0, 0.0]},
    )

    async def crossmodal(paragraph, image):
        return 2 * c1 - 1  # mapped back to [0,1] inside

    matrix = run(
        placement_matrix(["paragraph text"], [img], [doc], gw, cfg, crossmodal=crossmodal)
    )
    return matrix[0, 0]


def test_all_components_one_gives_one():
    assert _matrix_with_components(1.0, 1.0, 1.0, (0.4, 0.3, 0.3)) == pytest.approx(1.0)


def test_half_components_give_half_for_any_weights():
    for weights in [(0.4, 0.3, 0.3), (0.2, 0.5, 0.3), (1 / 3, 1 / 3, 1 / 3)]:
        assert _matrix_with_components(0.5, 0.5, 0.5, weights) == pytest.approx(0.5)


def test_crossmodal_only_gives_first_weight():
    assert _matrix_with_components(1.0, 0.0, 0.0, (0.4, 0.3, 0.3)) == pytest.approx(0.4)


def test_missing_crossmodal_redistributes_weights():
    cfg = PipelineConfig(image_weights=(0.4, 0.3, 0.3))
    img = _image(doc=1)
    doc = _doc(1)
    gw = ScriptedGateway(
        rerank_scores=[1.0],
        embed_map={"para": [1.0, 0.0], doc.clean_text[:2000]: [1.0, 0.0]},
    )
    matrix = run(placement_matrix(["para"], [img], [doc], gw, cfg, crossmodal=None))
    # components 2 and 3 both 1.0 -> degraded weights (0, .5, .5) -> score 1.0
    assert matrix[0, 0] == pytest.approx(1.0)


# -- assignment -----------------------------------------------------------------------


def test_identity_dominant_diagonal_assignment(cfg):
    matrix = [[0.9, 0.1, 0.1], [0.1, 0.9, 0.1], [0.1, 0.1, 0.9]]
    images = [_image(url=f"https://e.com/{i}.jpg") for i in range(3)]
    placements = assign_images(matrix, images, cfg)
    assert [(p.paragraph_index, p.image.url[-5]) for p in placements] == [
        (0, "0"), (1, "1"), (2, "2")
    ]


def _brute_force_best(matrix):
    rows, cols = len(matrix), len(matrix[0])
    best = 0.0
    if rows <= cols:
        for perm in itertools.permutations(range(cols), rows):
            best = max(best, sum(matrix[i][perm[i]] for i in range(rows)))
    else:
        for perm in itertools.permutations(range(rows), cols):
            best = max(best, sum(matrix[perm[j]][j] for j in range(cols)))
    return best


def test_two_paragraphs_three_images_matches_enumeration():
    cfg = PipelineConfig(image_placement_floor=0.0)
    matrix = [[0.6, 0.3, 0.8], [0.7, 0.9, 0.2]]
    images = [_image(url=f"https://e.com/{i}.jpg") for i in range(3)]
    placements = assign_images(matrix, images, cfg)
    assert len(placements) <= 2
    total = sum(p.score for p in placements)
    assert total == pytest.approx(_brute_force_best(matrix))
    paragraphs = [p.paragraph_index for p in placements]
    urls = [p.image.url for p in placements]
    assert len(set(paragraphs)) == len(paragraphs) and len(set(urls)) == len(urls)


def test_all_below_floor_no_placements(cfg):
    matrix = [[0.2, 0.1], [0.05, 0.24]]
    images = [_image(url=f"https://e.com/{i}.jpg") for i in range(2)]
    assert assign_images(matrix, images, cfg) == []


def test_hungarian_matches_brute_force_on_random_rectangles():
    rng = random.Random(99)
    cfg = PipelineConfig(image_placement_floor=0.0)
    for _ in range(150):
        rows = rng.randint(1, 5)
        cols = rng.randint(1, 5)
        matrix = [[rng.randint(0, 1024) / 1024 for _ in range(cols)] for _ in range(rows)]
        pairs = max_weight_assignment(matrix)
        total = sum(matrix[i][j] for i, j in pairs)
        assert total == pytest.approx(_brute_force_best(matrix), abs=1e-12)


def test_solve_min_cost_square_known_case():
    cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]]
    assignment = solve_min_cost(cost)
    total = sum(cost[i][assignment[i]] for i in range(3))
    assert total == 5.0  # 1 + 2 + 2
