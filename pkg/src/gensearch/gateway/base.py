"""Uniform access to the three model capabilities the pipeline needs:
generative chat, text embedding, and reranking.

Implementations: HttpGateway (live JSON providers) and StubGateway
(deterministic, offline). Both enforce a shared in-flight call limit so a
burst of callers queues instead of failing.
"""

from __future__ import annotations

import asyncio
import weakref
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import AsyncIterator, Literal, Optional, Sequence

from ..models import Embedding


class GatewayError(RuntimeError):
    """Base class for model-call failures."""


class TransportError(GatewayError):
    """Network/timeout trouble; retryable."""


class ProviderRefusalError(GatewayError):
    """The provider rejected the request semantically; never retried."""


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.3
    max_tokens: int = 2048
    stop: Optional[tuple[str, ...]] = None


# judge calls are scored at temperature 0 for reproducibility
JUDGE_PARAMS = GenerationParams(temperature=0.0, max_tokens=1024)


@dataclass(frozen=True)
class ProviderSpec:
    kind: Literal["chat", "embed", "rerank"]
    endpoint: str
    model_id: str
    auth: str = ""  # name of the env var holding the key; never the secret itself


class Gateway(ABC):
    """Shareable across concurrent callers; an internal limiter caps the
    number of outstanding model calls (excess callers queue)."""

    def __init__(self, max_inflight: int = 8):
        if max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")
        self._max_inflight = max_inflight
        # one semaphore per event loop so a gateway survives repeated asyncio.run()
        self._limiters: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()

    def _limiter(self) -> asyncio.Semaphore:
        loop = asyncio.get_running_loop()
        limiter = self._limiters.get(loop)
        if limiter is None:
            limiter = asyncio.Semaphore(self._max_inflight)
            self._limiters[loop] = limiter
        return limiter

    @abstractmethod
    async def chat_complete(
        self,
        prompt: str,
        params: GenerationParams | None = None,
        template_id: str = "adhoc",
    ) -> AsyncIterator[str]:
        """Stream a completion as ordered text deltas.

        The concatenation of the deltas is the full completion. Raises
        ValueError on an empty prompt, TransportError on network trouble,
        ProviderRefusalError on a semantic refusal.
        """

    async def chat_text(
        self,
        prompt: str,
        params: GenerationParams | None = None,
        template_id: str = "adhoc",
    ) -> str:
        stream = await self.chat_complete(prompt, params, template_id)
        parts = [delta async for delta in stream]
        return "".join(parts)

    @abstractmethod
    async def embed(self, texts: Sequence[str]) -> list[Embedding]:
        """Embed texts; output is order-preserving, one unit-norm vector each."""

    @abstractmethod
    async def rerank_score(self, query: str, passages: Sequence[str]) -> list[float]:
        """Relevance in [0,1] per passage, order-preserving."""

    def _check_chat_preconditions(self, prompt: str) -> None:
        if not prompt or not prompt.strip():
            raise ValueError("prompt must be non-empty")

    def _check_embed_preconditions(self, texts: Sequence[str]) -> None:
        for i, t in enumerate(texts):
            if not t:
                raise ValueError(f"embed input {i} is empty")

    def _check_rerank_preconditions(self, query: str, passages: Sequence[str]) -> None:
        if not passages:
            raise ValueError("rerank needs at least one passage")
        if not query:
            raise ValueError("rerank query must be non-empty")
