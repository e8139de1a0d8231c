"""TTL document cache: a local JSON key-value file, write-through.

Short default TTL (15 minutes) because search freshness matters more than
fetch savings. Cache failures degrade to a re-fetch, never to an error.
"""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Callable, Optional

from .models import RetrievedDocument
from .serialize import document_from_dict, document_to_dict

logger = logging.getLogger(__name__)


class DocumentCache:
    def __init__(
        self,
        path: Path | str,
        ttl: float = 900.0,
        now: Callable[[], float] = time.time,
    ):
        self.path = Path(path)
        self.ttl = ttl
        self._now = now
        self._entries: dict[str, dict] = {}
        if self.path.is_file():
            try:
                self._entries = json.loads(self.path.read_text(encoding="utf-8"))
            except (json.JSONDecodeError, OSError) as exc:
                logger.warning("cache file unreadable, starting empty: %s", exc)
                self._entries = {}

    def lookup(self, url: str) -> Optional[RetrievedDocument]:
        """TTL-respecting read; expired entries are dropped, never served."""
        entry = self._entries.get(url)
        if entry is None:
            return None
        age = self._now() - entry.get("fetched_at", 0.0)
        if age > entry.get("ttl", self.ttl):
            del self._entries[url]
            return None
        try:
            return document_from_dict(entry["doc"])
        except (KeyError, TypeError) as exc:
            logger.warning("corrupt cache entry for %s: %s", url, exc)
            del self._entries[url]
            return None

    def store(self, url: str, doc: RetrievedDocument) -> None:
        self._entries[url] = {
            "url": url,
            "fetched_at": self._now(),
            "ttl": self.ttl,
            "doc": document_to_dict(doc),
        }
        self._flush()

    def _flush(self) -> None:
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self.path.with_suffix(".tmp")
            tmp.write_text(json.dumps(self._entries, ensure_ascii=False), encoding="utf-8")
            tmp.replace(self.path)
        except OSError as exc:
            logger.warning("cache flush failed (cache disabled for this write): %s", exc)

    def __len__(self) -> int:
        return len(self._entries)
