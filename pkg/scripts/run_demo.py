#!/usr/bin/env python3
"""Build an offline fixture world and run one query end to end.

Writes the fixture tree to ./demo_fixtures (reusable with the CLI:
``gensearch search "<query>" --stub --fixtures demo_fixtures``) and prints
the streamed events, the final answer with citation markers, the timeline,
and the image placements.
"""

import asyncio
import sys
from datetime import datetime
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from fixture_kit import QUERY, build_demo_world  # noqa: E402

from gensearch.cli import insert_citation_markers  # noqa: E402
from gensearch.config import PipelineConfig  # noqa: E402
from gensearch.gateway.stub import make_stub_gateway  # noqa: E402
from gensearch.pipeline import SearchPipeline  # noqa: E402
from gensearch.preproc import UserContext  # noqa: E402
from gensearch.retrieval.sources import FileSource  # noqa: E402
from gensearch.serialize import citation_event_to_dict  # noqa: E402


async def main() -> None:
    root = Path("demo_fixtures")
    world = build_demo_world(root)
    print(f"fixtures written to {root}/")

    gateway = make_stub_gateway(world.gateway_dir, seed=0)
    sources = [FileSource(world.sources_dir / s, source_id=s) for s in world.source_ids]
    pipeline = SearchPipeline(gateway, sources, PipelineConfig())

    async def emit(event: str, payload: dict) -> None:
        if event in ("meta", "timeline", "images", "done", "error", "citation"):
            print(f"  [{event}] {str(payload)[:110]}")

    ctx = UserContext(local_time=datetime(2025, 3, 10, 9, 0), location="Riverton")
    session = await pipeline.run(QUERY, ctx=ctx, emit=emit)

    if session.error:
        print("pipeline error:", session.error)
        return
    print("\n=== final answer (with citation markers) ===")
    events = [citation_event_to_dict(e) for e in session.citation_events]
    print(insert_citation_markers(session.final_answer.text, events))
    print("\n=== timeline ===")
    for group in session.timeline_groups:
        print(f"- {group.label} {list(group.keywords)}")
        for event in group.events:
            print(f"    {event.timestamp.date()}  {event.title}")
    print("\n=== image placements ===")
    for placement in session.image_placements:
        print(f"- paragraph {placement.paragraph_index}: {placement.image.url} (s={placement.score:.3f})")
    print("\nstage timings:", {k: round(v, 4) for k, v in session.timings.items()})


if __name__ == "__main__":
    asyncio.run(main())
