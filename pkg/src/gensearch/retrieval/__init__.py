from .chunk import chunk_ranges, chunk_text
from .clean import clean_document
from .expand import EXPANSION_DIMENSIONS, RetrievalQuery, expand_query
from .sources import (
    FileSource,
    HttpSource,
    PageFetchError,
    RawSearchHit,
    RetrievalError,
    SearchSource,
    fetch_multi_source,
    url_digest,
)

__all__ = [
    "EXPANSION_DIMENSIONS",
    "FileSource",
    "HttpSource",
    "PageFetchError",
    "RawSearchHit",
    "RetrievalError",
    "RetrievalQuery",
    "SearchSource",
    "chunk_ranges",
    "chunk_text",
    "clean_document",
    "expand_query",
    "fetch_multi_source",
    "url_digest",
]
