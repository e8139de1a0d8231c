"""Live HTTP providers behind the gateway interface.

Chat and embeddings speak the ubiquitous OpenAI-compatible JSON shapes;
rerank follows the Cohere/Jina convention (query + documents in, indexed
relevance scores out). Endpoints and model ids come from ProviderSpec;
the API key is read from the env var the spec names.

Transport errors (timeouts, connection failures, 5xx) are retried twice
with exponential backoff. Provider refusals (4xx) are terminal: retrying
a semantic rejection only wastes budget.
"""

from __future__ import annotations

import asyncio
import json
import logging
import os
from typing import AsyncIterator, Optional, Sequence

import httpx
import numpy as np

from ..models import Embedding
from .base import (
    Gateway,
    GenerationParams,
    ProviderRefusalError,
    ProviderSpec,
    TransportError,
)

logger = logging.getLogger(__name__)

MAX_TRANSPORT_RETRIES = 2
BACKOFF_BASE_SECONDS = 0.5


class HttpGateway(Gateway):
    def __init__(
        self,
        chat: ProviderSpec,
        embed: ProviderSpec,
        rerank: ProviderSpec,
        max_inflight: int = 8,
        timeout: float = 30.0,
        client: Optional[httpx.AsyncClient] = None,
    ):
        super().__init__(max_inflight)
        self.specs = {"chat": chat, "embed": embed, "rerank": rerank}
        self._client = client or httpx.AsyncClient(timeout=timeout)

    async def aclose(self) -> None:
        await self._client.aclose()

    def _headers(self, spec: ProviderSpec) -> dict:
        headers = {"Content-Type": "application/json"}
        if spec.auth:
            key = os.environ.get(spec.auth, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    async def _post_json(self, spec: ProviderSpec, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(MAX_TRANSPORT_RETRIES + 1):
            try:
                response = await self._client.post(
                    spec.endpoint, json=payload, headers=self._headers(spec)
                )
            except httpx.HTTPError as exc:
                last_error = TransportError(f"{spec.kind} provider unreachable: {exc}")
            else:
                if response.status_code < 400:
                    return response.json()
                if 400 <= response.status_code < 500:
                    raise ProviderRefusalError(
                        f"{spec.kind} provider rejected the request "
                        f"({response.status_code}): {response.text[:200]}"
                    )
                last_error = TransportError(
                    f"{spec.kind} provider error {response.status_code}"
                )
            if attempt < MAX_TRANSPORT_RETRIES:
                await asyncio.sleep(BACKOFF_BASE_SECONDS * (2**attempt))
        raise last_error  # type: ignore[misc]

    # -- chat ---------------------------------------------------------------

    async def chat_complete(
        self,
        prompt: str,
        params: GenerationParams | None = None,
        template_id: str = "adhoc",
    ) -> AsyncIterator[str]:
        self._check_chat_preconditions(prompt)
        params = params or GenerationParams()
        spec = self.specs["chat"]
        payload = {
            "model": spec.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stream": True,
        }
        if params.stop:
            payload["stop"] = list(params.stop)
        return self._stream_chat(spec, payload)

    async def _stream_chat(self, spec: ProviderSpec, payload: dict) -> AsyncIterator[str]:
        async with self._limiter():
            async for delta in self._stream_chat_once(spec, payload):
                yield delta

    async def _stream_chat_once(self, spec: ProviderSpec, payload: dict) -> AsyncIterator[str]:
        last_error: Exception | None = None
        for attempt in range(MAX_TRANSPORT_RETRIES + 1):
            yielded = False
            try:
                async with self._client.stream(
                    "POST", spec.endpoint, json=payload, headers=self._headers(spec)
                ) as response:
                    if response.status_code >= 400:
                        body = await response.aread()
                        if response.status_code < 500:
                            raise ProviderRefusalError(
                                f"chat provider rejected the request "
                                f"({response.status_code}): {body[:200]!r}"
                            )
                        raise TransportError(f"chat provider error {response.status_code}")
                    async for line in response.aiter_lines():
                        line = line.strip()
                        if not line.startswith("data:"):
                            continue
                        data = line[len("data:") :].strip()
                        if data == "[DONE]":
                            return
                        try:
                            parsed = json.loads(data)
                        except json.JSONDecodeError:
                            logger.warning("skipping malformed stream chunk: %r", data[:80])
                            continue
                        delta = (
                            parsed.get("choices", [{}])[0].get("delta", {}).get("content")
                        )
                        if delta:
                            yielded = True
                            yield delta
                    return
            except httpx.HTTPError as exc:
                last_error = TransportError(f"chat provider unreachable: {exc}")
            except TransportError as exc:
                last_error = exc
            if yielded:
                # a partially consumed stream cannot be replayed transparently
                raise last_error  # type: ignore[misc]
            if attempt < MAX_TRANSPORT_RETRIES:
                await asyncio.sleep(BACKOFF_BASE_SECONDS * (2**attempt))
        raise last_error  # type: ignore[misc]

    # -- embed ----------------------------------------------------------------

    async def embed(self, texts: Sequence[str]) -> list[Embedding]:
        self._check_embed_preconditions(texts)
        if not texts:
            return []
        async with self._limiter():
            return await self._embed_batch(list(texts))

    async def _embed_batch(self, texts: list[str]) -> list[Embedding]:
        spec = self.specs["embed"]
        payload = {"model": spec.model_id, "input": texts}
        try:
            data = await self._post_json(spec, payload)
        except ProviderRefusalError:
            if len(texts) == 1:
                raise
            # batch too large for the provider: split and retry both halves
            mid = len(texts) // 2
            left = await self._embed_batch(texts[:mid])
            right = await self._embed_batch(texts[mid:])
            return left + right
        vectors = sorted(data["data"], key=lambda item: item.get("index", 0))
        return [Embedding(np.asarray(v["embedding"], dtype=np.float64)) for v in vectors]

    # -- rerank ---------------------------------------------------------------

    async def rerank_score(self, query: str, passages: Sequence[str]) -> list[float]:
        self._check_rerank_preconditions(query, passages)
        spec = self.specs["rerank"]
        payload = {
            "model": spec.model_id,
            "query": query,
            "documents": list(passages),
        }
        async with self._limiter():
            data = await self._post_json(spec, payload)
        scores = [0.0] * len(passages)
        for item in data.get("results", []):
            idx = int(item["index"])
            if 0 <= idx < len(scores):
                scores[idx] = max(0.0, min(1.0, float(item["relevance_score"])))
        return scores
