"""Streaming HTTP service.

Endpoints:
  POST /api/analyze       JSON in/out — refusal or clarification round-trip
  POST /api/search        JSON in, text/event-stream out (SSE)
  GET  /api/session/<id>  stored session transcript JSON

SSE frames are ``event: <name>\\ndata: <json>\\n\\n`` with event names
meta, node_answer, answer, citation, timeline, images, done, error.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .gateway.base import GatewayError
from .pipeline import SearchPipeline, REFUSAL_MESSAGE
from .preproc import UserContext
from .textutil import parse_timestamp

logger = logging.getLogger(__name__)


class AnalyzeRequest(BaseModel):
    query: str
    local_time: Optional[str] = None
    location: Optional[str] = None
    language: str = "en"


class SearchRequest(BaseModel):
    query: str
    chosen_option: Optional[str] = None
    local_time: Optional[str] = None
    location: Optional[str] = None
    language: str = "en"


def _user_context(local_time: Optional[str], location: Optional[str], language: str) -> UserContext:
    parsed = parse_timestamp(local_time) if local_time else None
    if parsed is not None:
        return UserContext(local_time=parsed, location=location, language=language)
    return UserContext(location=location, language=language)


def sse_frame(event: str, payload: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(payload, ensure_ascii=False)}\n\n"


def create_app(
    pipeline: SearchPipeline,
    session_dir: Path | str = "sessions",
    static_dir: Path | str | None = None,
) -> FastAPI:
    app = FastAPI(title="gensearch")
    session_dir = Path(session_dir)
    sessions: dict[str, dict] = {}

    @app.post("/api/analyze")
    async def analyze(request: AnalyzeRequest):
        if not request.query.strip():
            raise HTTPException(status_code=400, detail="query must be non-empty")
        try:
            intent = await pipeline.analyze(request.query)
        except GatewayError as exc:
            raise HTTPException(status_code=502, detail=f"model gateway failed: {exc}")
        body: dict = {
            "Refusal": "Yes" if intent.refusal else "No",
            "Category": intent.refusal_category,
            "Requires additional input": "Yes" if intent.needs_clarification else "No",
            "Additional options": (
                {
                    "Prompt description": intent.clarification_prompt,
                    "Choices": list(intent.options),
                }
                if intent.needs_clarification
                else None
            ),
        }
        if intent.refusal:
            body["message"] = REFUSAL_MESSAGE
        return JSONResponse(body)

    @app.post("/api/search")
    async def search(request: SearchRequest):
        if not request.query.strip():
            raise HTTPException(status_code=400, detail="query must be non-empty")
        ctx = _user_context(request.local_time, request.location, request.language)
        queue: asyncio.Queue = asyncio.Queue()
        DONE = object()

        async def emit(event: str, payload: dict) -> None:
            await queue.put((event, payload))

        async def run() -> None:
            try:
                session = await pipeline.run(
                    request.query,
                    ctx=ctx,
                    chosen_option=request.chosen_option,
                    emit=emit,
                )
                data = session.to_dict()
                sessions[session.session_id] = data
                try:
                    session_dir.mkdir(parents=True, exist_ok=True)
                    path = session_dir / f"{session.session_id}.json"
                    path.write_text(
                        json.dumps(data, ensure_ascii=False, indent=1), encoding="utf-8"
                    )
                except OSError as exc:
                    logger.warning("failed to persist session log: %s", exc)
            finally:
                await queue.put(DONE)

        async def stream():
            task = asyncio.ensure_future(run())
            try:
                while True:
                    item = await queue.get()
                    if item is DONE:
                        break
                    event, payload = item
                    yield sse_frame(event, payload)
                await task
            finally:
                if not task.done():
                    task.cancel()

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/api/session/{session_id}")
    async def get_session(session_id: str):
        if session_id in sessions:
            return JSONResponse(sessions[session_id])
        path = session_dir / f"{session_id}.json"
        if path.is_file():
            return JSONResponse(json.loads(path.read_text(encoding="utf-8")))
        raise HTTPException(status_code=404, detail="unknown session id")

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
