"""Deterministic offline gateway backed by fixture files.

Chat responses are resolved by prompt-template id plus a digest of the
rendered prompt: ``<fixture_dir>/<template_id>/<sha256(prompt)[:16]>.txt``.
A ``default.txt`` in the template directory answers any unmatched prompt of
that template; otherwise a deterministic canned fallback is returned.

Embeddings are a seeded character n-gram hash projection (fixed dimension
64); rerank scores are token-overlap Jaccard. With this gateway the whole
pipeline is a pure function of (query, fixtures, seed, config).

Fixture files may start with a sentinel line to simulate failures:
``!ERROR:transport`` raises TransportError, ``!ERROR:refusal`` raises
ProviderRefusalError.
"""

from __future__ import annotations

import asyncio
import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import AsyncIterator, Optional, Sequence

import numpy as np

from ..models import Embedding
from ..textutil import tokenize
from .base import Gateway, GenerationParams, ProviderRefusalError, TransportError

STUB_EMBED_DIMENSION = 64


class FixtureDirMissingError(FileNotFoundError):
    """The stub cannot start without its fixture directory."""


def fixture_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


def fixture_path(fixture_dir: Path | str, template_id: str, prompt: str) -> Path:
    return Path(fixture_dir) / template_id / f"{fixture_digest(prompt)}.txt"


def write_fixture(fixture_dir: Path | str, template_id: str, prompt: str, response: str) -> Path:
    path = fixture_path(fixture_dir, template_id, prompt)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(response, encoding="utf-8")
    return path


def write_default_fixture(fixture_dir: Path | str, template_id: str, response: str) -> Path:
    path = Path(fixture_dir) / template_id / "default.txt"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(response, encoding="utf-8")
    return path


@dataclass
class CallRecord:
    seq: int
    kind: str  # chat | embed | rerank
    template_id: str = ""
    prompt: str = ""
    digest: str = ""
    temperature: Optional[float] = None
    started: float = 0.0
    finished: float = 0.0
    matched_fixture: bool = False


@dataclass
class CallLog:
    records: list[CallRecord] = field(default_factory=list)

    def add(self, record: CallRecord) -> None:
        self.records.append(record)

    def by_kind(self, kind: str) -> list[CallRecord]:
        return [r for r in self.records if r.kind == kind]

    def by_template(self, template_id: str) -> list[CallRecord]:
        return [r for r in self.records if r.template_id == template_id]

    def __len__(self) -> int:
        return len(self.records)


class StubGateway(Gateway):
    def __init__(
        self,
        fixture_dir: Path | str,
        seed: int = 0,
        max_inflight: int = 8,
        delay: float = 0.0,
    ):
        super().__init__(max_inflight)
        self.fixture_dir = Path(fixture_dir)
        if not self.fixture_dir.is_dir():
            raise FixtureDirMissingError(f"fixture directory not found: {self.fixture_dir}")
        self.seed = seed
        self.delay = delay  # artificial latency per call, for concurrency tests
        self.call_log = CallLog()
        self._seq = 0
        self._inflight = 0
        self.max_observed_inflight = 0
        self._hash_key = hashlib.sha256(f"stub-embed-{seed}".encode()).digest()[:32]

    def _next_record(self, kind: str, **kw) -> CallRecord:
        record = CallRecord(seq=self._seq, kind=kind, started=time.monotonic(), **kw)
        self._seq += 1
        self.call_log.add(record)
        return record

    def _resolve_chat(self, prompt: str, template_id: str) -> tuple[str, bool]:
        digest = fixture_digest(prompt)
        exact = self.fixture_dir / template_id / f"{digest}.txt"
        if exact.is_file():
            return exact.read_text(encoding="utf-8"), True
        default = self.fixture_dir / template_id / "default.txt"
        if default.is_file():
            return default.read_text(encoding="utf-8"), True
        return f"stub-fallback {template_id} {digest}", False

    @staticmethod
    def _raise_sentinel(text: str) -> str:
        first, _, rest = text.partition("\n")
        if first.strip() == "!ERROR:transport":
            raise TransportError("stub fixture simulated a transport failure")
        if first.strip() == "!ERROR:refusal":
            raise ProviderRefusalError("stub fixture simulated a provider refusal")
        return text

    async def chat_complete(
        self,
        prompt: str,
        params: GenerationParams | None = None,
        template_id: str = "adhoc",
    ) -> AsyncIterator[str]:
        self._check_chat_preconditions(prompt)
        params = params or GenerationParams()
        record = self._next_record(
            "chat",
            template_id=template_id,
            prompt=prompt,
            digest=fixture_digest(prompt),
            temperature=params.temperature,
        )
        async with self._limiter():
            self._inflight += 1
            self.max_observed_inflight = max(self.max_observed_inflight, self._inflight)
            try:
                if self.delay:
                    await asyncio.sleep(self.delay)
                text, matched = self._resolve_chat(prompt, template_id)
                record.matched_fixture = matched
                text = self._raise_sentinel(text)
            finally:
                self._inflight -= 1
                record.finished = time.monotonic()
        return self._stream_text(text)

    @staticmethod
    async def _stream_text(text: str) -> AsyncIterator[str]:
        # at least two deltas so stream consumers are genuinely exercised
        if len(text) < 2:
            yield text
            return
        step = max(1, -(-len(text) // 4))
        for i in range(0, len(text), step):
            yield text[i : i + step]

    def _embed_one(self, text: str) -> Embedding:
        vec = np.zeros(STUB_EMBED_DIMENSION, dtype=np.float64)
        for n in (1, 2, 3):
            for i in range(len(text) - n + 1):
                gram = text[i : i + n]
                h = hashlib.blake2b(
                    gram.encode("utf-8"), digest_size=8, key=self._hash_key
                ).digest()
                value = int.from_bytes(h, "big")
                bucket = value % STUB_EMBED_DIMENSION
                sign = 1.0 if (value >> 8) & 1 else -1.0
                vec[bucket] += sign
        if not vec.any():
            # pathological cancellation: fall back to a single whole-text hash
            h = hashlib.blake2b(text.encode("utf-8"), digest_size=8, key=self._hash_key).digest()
            vec[int.from_bytes(h, "big") % STUB_EMBED_DIMENSION] = 1.0
        return Embedding(vec)

    async def embed(self, texts: Sequence[str]) -> list[Embedding]:
        self._check_embed_preconditions(texts)
        if not texts:
            return []
        record = self._next_record("embed", prompt="\x1f".join(texts))
        async with self._limiter():
            self._inflight += 1
            self.max_observed_inflight = max(self.max_observed_inflight, self._inflight)
            try:
                if self.delay:
                    await asyncio.sleep(self.delay)
                return [self._embed_one(t) for t in texts]
            finally:
                self._inflight -= 1
                record.finished = time.monotonic()

    async def rerank_score(self, query: str, passages: Sequence[str]) -> list[float]:
        self._check_rerank_preconditions(query, passages)
        record = self._next_record("rerank", prompt=query)
        async with self._limiter():
            self._inflight += 1
            self.max_observed_inflight = max(self.max_observed_inflight, self._inflight)
            try:
                if self.delay:
                    await asyncio.sleep(self.delay)
                query_tokens = set(tokenize(query))
                scores = []
                for passage in passages:
                    ptokens = set(tokenize(passage))
                    union = query_tokens | ptokens
                    if not union:
                        scores.append(0.0)
                    else:
                        scores.append(len(query_tokens & ptokens) / len(union))
                return scores
            finally:
                self._inflight -= 1
                record.finished = time.monotonic()


def make_stub_gateway(
    fixture_dir: Path | str,
    seed: int = 0,
    max_inflight: int = 8,
    delay: float = 0.0,
) -> StubGateway:
    return StubGateway(fixture_dir, seed=seed, max_inflight=max_inflight, delay=delay)
