"""Command-line interface: ``search``, ``eval``, ``serve``.

Stub mode (``--stub --fixtures DIR``) expects a fixture root laid out as

    fixtures/
      gateway/<template_id>/<digest>.txt    chat-model replies
      sources/<source_id>/hits.json         search hits per query
      sources/<source_id>/pages/<sha>.html  page bodies

Live mode reads provider specs from a JSON file (``--providers``).

Exit codes: 0 ok, 1 pipeline error, 2 configuration error, 3 refused query.
"""

from __future__ import annotations

import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Optional

import click

from .cache import DocumentCache
from .config import PipelineConfig, load_config
from .evaluation import FACETS, format_report_table, run_eval_suite
from .gateway.base import ProviderSpec
from .gateway.http import HttpGateway
from .gateway.stub import FixtureDirMissingError, make_stub_gateway
from .pipeline import SearchPipeline
from .preproc import UserContext
from .retrieval.sources import FileSource
from .serialize import placement_to_dict, timeline_group_to_dict
from .textutil import parse_timestamp

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_CONFIG = 2
EXIT_REFUSED = 3


def _load_cfg(config_path: Optional[str]) -> PipelineConfig:
    return load_config(config_path)


def _build_stub(fixtures: Optional[str], seed: int, cfg: PipelineConfig, sources_filter: Optional[str]):
    if not fixtures:
        raise click.ClickException("--stub requires --fixtures DIR")
    root = Path(fixtures)
    gateway_dir = root / "gateway"
    try:
        gateway = make_stub_gateway(
            gateway_dir, seed=seed, max_inflight=cfg.max_inflight_model_calls
        )
    except FixtureDirMissingError as exc:
        raise click.ClickException(str(exc))
    sources_root = root / "sources"
    if not sources_root.is_dir():
        raise click.ClickException(f"missing stub sources directory: {sources_root}")
    wanted = set(sources_filter.split(",")) if sources_filter else None
    sources = []
    for child in sorted(sources_root.iterdir()):
        if not child.is_dir():
            continue
        if wanted is not None and child.name not in wanted:
            continue
        sources.append(FileSource(child, source_id=child.name))
    if not sources:
        raise click.ClickException(f"no stub sources found under {sources_root}")
    return gateway, sources


def _build_live(providers: Optional[str], cfg: PipelineConfig, sources_filter: Optional[str]):
    if not providers:
        raise click.ClickException("live mode requires --providers FILE (or use --stub)")
    spec_data = json.loads(Path(providers).read_text(encoding="utf-8"))
    required = {"chat", "embed", "rerank"}
    if not required <= set(spec_data):
        raise click.ClickException(f"providers file must define {sorted(required)}")
    specs = {
        kind: ProviderSpec(kind=kind, **{k: v for k, v in spec_data[kind].items()})
        for kind in required
    }
    gateway = HttpGateway(
        chat=specs["chat"],
        embed=specs["embed"],
        rerank=specs["rerank"],
        max_inflight=cfg.max_inflight_model_calls,
    )
    from .retrieval.sources import HttpSource

    sources = []
    for entry in spec_data.get("search_sources", []):
        source_id = entry.get("source_id", "http")
        if sources_filter and source_id not in sources_filter.split(","):
            continue
        sources.append(HttpSource(entry["endpoint"], source_id=source_id))
    if not sources:
        raise click.ClickException("no search sources configured")
    return gateway, sources


def insert_citation_markers(text: str, events: list[dict]) -> str:
    """Insert [n] markers at cited sentence ends, right-to-left."""
    cited = [e for e in events if e.get("doc_index") is not None]
    for event in sorted(cited, key=lambda e: e["end"], reverse=True):
        end = event["end"]
        text = text[:end] + f"[{event['doc_index']}]" + text[end:]
    return text


@click.group()
@click.option("--verbose", is_flag=True, help="debug logging")
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.argument("query")
@click.option("--stub", is_flag=True, help="use the deterministic stub gateway")
@click.option("--fixtures", type=click.Path(), help="fixture root for stub mode")
@click.option("--providers", type=click.Path(exists=True), help="provider spec JSON for live mode")
@click.option("--config", "config_path", type=click.Path(exists=True), help="pipeline config JSON")
@click.option("--sources", "sources_filter", help="comma-separated source ids to use")
@click.option("--out-dir", type=click.Path(), default="out", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--chosen-option", help="disambiguation option chosen by the user")
@click.option("--location", help="user location")
@click.option("--language", default="en", show_default=True)
@click.option("--time", "local_time", help="user local time (ISO)")
@click.option("--no-cache", is_flag=True, help="always fetch pages")
@click.option("--dump-context", help="print the ranked context of this node as JSON")
@click.option("--eval", "run_eval", is_flag=True, help="judge the answer after the run")
def search(
    query, stub, fixtures, providers, config_path, sources_filter, out_dir, seed,
    chosen_option, location, language, local_time, no_cache, dump_context, run_eval,
):
    """Run one query end to end and write answer.md, timeline.json,
    images.json, and session.json."""
    try:
        cfg = _load_cfg(config_path)
        if stub:
            gateway, sources = _build_stub(fixtures, seed, cfg, sources_filter)
        else:
            gateway, sources = _build_live(providers, cfg, sources_filter)
    except (click.ClickException, ValueError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache = None if no_cache else DocumentCache(out / "cache.json", ttl=cfg.cache_ttl)
    pipeline = SearchPipeline(gateway, sources, cfg, cache=cache)
    parsed_time = parse_timestamp(local_time) if local_time else None
    ctx = (
        UserContext(local_time=parsed_time, location=location, language=language)
        if parsed_time
        else UserContext(location=location, language=language)
    )

    session = asyncio.run(pipeline.run(query, ctx=ctx, chosen_option=chosen_option))
    data = session.to_dict()

    (out / "session.json").write_text(
        json.dumps(data, ensure_ascii=False, indent=1), encoding="utf-8"
    )
    if session.error is not None:
        code, message = session.error
        click.echo(f"pipeline error [{code}]: {message}", err=True)
        sys.exit(EXIT_REFUSED if code == "REFUSED" else EXIT_PIPELINE)

    answer_md = insert_citation_markers(data["final_answer"], data["citation_events"])
    (out / "answer.md").write_text(answer_md, encoding="utf-8")
    (out / "timeline.json").write_text(
        json.dumps(
            {"groups": [timeline_group_to_dict(g) for g in session.timeline_groups]},
            ensure_ascii=False,
            indent=1,
        ),
        encoding="utf-8",
    )
    (out / "images.json").write_text(
        json.dumps(
            {"placements": [placement_to_dict(p) for p in session.image_placements]},
            ensure_ascii=False,
            indent=1,
        ),
        encoding="utf-8",
    )
    if dump_context:
        ctx_data = data["node_contexts"].get(dump_context)
        if ctx_data is None:
            click.echo(f"no such node: {dump_context}", err=True)
        else:
            click.echo(json.dumps(ctx_data, ensure_ascii=False, indent=1))
    if run_eval:
        report = asyncio.run(
            run_eval_suite(out, FACETS, gateway, current_date="")
        )
        (out / "report.json").write_text(
            json.dumps(report, ensure_ascii=False, indent=1, sort_keys=True),
            encoding="utf-8",
        )
        click.echo(format_report_table(report))
    click.echo(f"ok: outputs written to {out}/")
    sys.exit(EXIT_OK)


@main.group()
def eval() -> None:
    """Evaluation harness."""


@eval.command("run")
@click.option("--facets", default=",".join(FACETS), show_default=False, help="comma-separated facet names")
@click.option("--input", "input_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default="report.json", show_default=True)
@click.option("--stub", is_flag=True)
@click.option("--fixtures", type=click.Path())
@click.option("--providers", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--seed", type=int, default=0)
@click.option("--current-date", default="", help="fills the Timeliness date slot")
def eval_run(facets, input_dir, out_path, stub, fixtures, providers, config_path, seed, current_date):
    """Judge every session transcript in --input on the given facets."""
    try:
        cfg = _load_cfg(config_path)
        if stub:
            if not fixtures:
                raise click.ClickException("--stub requires --fixtures DIR")
            gateway = make_stub_gateway(
                Path(fixtures) / "gateway", seed=seed, max_inflight=cfg.max_inflight_model_calls
            )
        else:
            gateway, _ = _build_live(providers, cfg, None)
    except (click.ClickException, ValueError, OSError, FixtureDirMissingError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    facet_list = [f.strip() for f in facets.split(",") if f.strip()]
    try:
        report = asyncio.run(
            run_eval_suite(input_dir, facet_list, gateway, current_date=current_date)
        )
    except (FileNotFoundError, KeyError) as exc:
        click.echo(f"evaluation error: {exc}", err=True)
        sys.exit(EXIT_PIPELINE)
    Path(out_path).write_text(
        json.dumps(report, ensure_ascii=False, indent=1, sort_keys=True), encoding="utf-8"
    )
    click.echo(format_report_table(report))
    sys.exit(EXIT_OK)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--stub", is_flag=True)
@click.option("--fixtures", type=click.Path())
@click.option("--providers", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--sources", "sources_filter")
@click.option("--seed", type=int, default=0)
@click.option("--session-dir", type=click.Path(), default="sessions", show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(), help="serve this directory as the web UI root")
def serve(host, port, stub, fixtures, providers, config_path, sources_filter, seed, session_dir, ui_dir):
    """Run the streaming HTTP service."""
    import uvicorn

    from .service import create_app

    try:
        cfg = _load_cfg(config_path)
        if stub:
            gateway, sources = _build_stub(fixtures, seed, cfg, sources_filter)
        else:
            gateway, sources = _build_live(providers, cfg, sources_filter)
    except (click.ClickException, ValueError, OSError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    cache = DocumentCache(Path(session_dir) / "cache.json", ttl=cfg.cache_ttl)
    pipeline = SearchPipeline(gateway, sources, cfg, cache=cache)
    app = create_app(pipeline, session_dir=session_dir, static_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
