"""Search source clients and the concurrent multi-source fan-out.

A source answers a retrieval query with ranked hits and can fetch page
bodies. FileSource reads both from a fixture directory (``hits.json`` plus
``pages/<sha256(url)>.html``) so retrieval is fully offline-testable;
HttpSource adapts a JSON search API.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import httpx

from ..config import PipelineConfig
from .expand import RetrievalQuery

logger = logging.getLogger(__name__)


class RetrievalError(RuntimeError):
    """Every configured source failed; the pipeline has nothing to read."""


class PageFetchError(RuntimeError):
    pass


@dataclass(frozen=True)
class RawSearchHit:
    url: str
    title: str = ""
    snippet: str = ""
    source_id: str = ""
    rank_in_source: int = 1


class SearchSource(ABC):
    source_id: str = "source"

    @abstractmethod
    async def search(self, query: str, locale: str = "en", page_size: int = 10) -> list[RawSearchHit]:
        """Ordered hits for a query; rank_in_source is 1-based and increasing."""

    @abstractmethod
    async def fetch_page(self, url: str) -> bytes:
        """Raw page body for a hit produced by this source."""


def url_digest(url: str) -> str:
    return hashlib.sha256(url.encode("utf-8")).hexdigest()


class FileSource(SearchSource):
    """Fixture-backed source. ``hits.json`` maps query text to hit lists
    (a ``"*"`` key matches any query); page bodies live under
    ``pages/<sha256(url)>.html``."""

    def __init__(self, fixture_dir: Path | str, source_id: str = "file"):
        self.fixture_dir = Path(fixture_dir)
        self.source_id = source_id
        hits_file = self.fixture_dir / "hits.json"
        if not hits_file.is_file():
            raise FileNotFoundError(f"missing {hits_file}")
        self._hits: dict = json.loads(hits_file.read_text(encoding="utf-8"))
        self.search_log: list[str] = []
        self.fetch_log: list[str] = []

    async def search(self, query: str, locale: str = "en", page_size: int = 10) -> list[RawSearchHit]:
        self.search_log.append(query)
        entries = self._hits.get(query)
        if entries is None:
            entries = self._hits.get("*", [])
        hits = []
        for rank, entry in enumerate(entries[:page_size], start=1):
            hits.append(
                RawSearchHit(
                    url=entry["url"],
                    title=entry.get("title", ""),
                    snippet=entry.get("snippet", ""),
                    source_id=self.source_id,
                    rank_in_source=rank,
                )
            )
        return hits

    async def fetch_page(self, url: str) -> bytes:
        self.fetch_log.append(url)
        path = self.fixture_dir / "pages" / f"{url_digest(url)}.html"
        if not path.is_file():
            raise PageFetchError(f"no fixture page for {url}")
        return path.read_bytes()


class HttpSource(SearchSource):
    """JSON search API: GET ``endpoint?q=...`` returning
    ``{"results": [{"url", "title", "snippet"}, ...]}``."""

    def __init__(
        self,
        endpoint: str,
        source_id: str = "http",
        client: Optional[httpx.AsyncClient] = None,
        timeout: float = 10.0,
    ):
        self.endpoint = endpoint
        self.source_id = source_id
        self._client = client or httpx.AsyncClient(timeout=timeout)

    async def search(self, query: str, locale: str = "en", page_size: int = 10) -> list[RawSearchHit]:
        response = await self._client.get(
            self.endpoint, params={"q": query, "locale": locale, "count": page_size}
        )
        response.raise_for_status()
        data = response.json()
        hits = []
        for rank, entry in enumerate(data.get("results", [])[:page_size], start=1):
            hits.append(
                RawSearchHit(
                    url=entry["url"],
                    title=entry.get("title", ""),
                    snippet=entry.get("snippet", ""),
                    source_id=self.source_id,
                    rank_in_source=rank,
                )
            )
        return hits

    async def fetch_page(self, url: str) -> bytes:
        response = await self._client.get(url)
        response.raise_for_status()
        return response.content


async def fetch_multi_source(
    queries: Sequence[RetrievalQuery],
    sources: Sequence[SearchSource],
    cfg: PipelineConfig,
    max_concurrent: int = 16,
) -> list[RawSearchHit]:
    """Issue every (query, source) pair concurrently and merge the hits.

    Each call is bounded by cfg.per_source_timeout. Duplicate URLs keep the
    hit with the lowest rank_in_source (ties: earlier source, then earlier
    query). A failing source only loses its own results; when every pair
    fails, RetrievalError is raised.
    """
    if not sources:
        raise RetrievalError("no search sources configured")
    if not queries:
        return []
    limiter = asyncio.Semaphore(max_concurrent)

    async def run_one(query: RetrievalQuery, source: SearchSource) -> list[RawSearchHit]:
        async with limiter:
            return await asyncio.wait_for(
                source.search(query.text), timeout=cfg.per_source_timeout
            )

    pairs = [(q, s) for q in queries for s in sources]
    results = await asyncio.gather(
        *(run_one(q, s) for q, s in pairs), return_exceptions=True
    )

    succeeded = 0
    best: dict[str, tuple[tuple[int, int, int], RawSearchHit]] = {}
    for pair_index, outcome in enumerate(results):
        query_index = pair_index // len(sources)
        source_index = pair_index % len(sources)
        if isinstance(outcome, BaseException):
            q, s = pairs[pair_index]
            logger.warning(
                "source %s failed for query %r: %s", s.source_id, q.text, outcome
            )
            continue
        succeeded += 1
        for hit in outcome:
            key = (hit.rank_in_source, source_index, query_index)
            kept = best.get(hit.url)
            if kept is None or key < kept[0]:
                best[hit.url] = (key, hit)
    if succeeded == 0:
        raise RetrievalError("all search sources failed")
    merged = sorted(best.values(), key=lambda pair: pair[0])
    return [hit for _, hit in merged]
