"""Generative AI search orchestration engine.

Query preprocessing, query-decomposition-graph planning, multi-source
retrieval with content filtering, passage dedup/selection/rerank, stepwise
answer generation, and rich presentation (sentence-level citations,
timeline, image choreography) — behind a swappable model gateway, exposed
as a streaming HTTP service and a CLI.
"""

from .config import PipelineConfig, load_config, validate_config
from .models import (
    DimensionMismatchError,
    Embedding,
    ImageAsset,
    Passage,
    RetrievedDocument,
    cosine_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatchError",
    "Embedding",
    "ImageAsset",
    "Passage",
    "PipelineConfig",
    "RetrievedDocument",
    "cosine_similarity",
    "load_config",
    "validate_config",
    "__version__",
]
