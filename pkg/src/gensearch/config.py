"""Pipeline configuration: every tunable constant lives here.

Loaded from a JSON file (field names mirror the dataclass) with
environment-variable overrides keyed by the upper-cased field name,
e.g. ``DEDUP_THRESHOLD=0.75``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path


@dataclass(frozen=True)
class PipelineConfig:
    # similarity thresholds
    dedup_threshold: float = 0.8
    timeline_merge_threshold: float = 0.9
    citation_fallback_threshold: float = 0.6
    image_relevance_threshold: float = 0.3

    # chunking
    chunk_size: int = 350
    chunk_overlap_ratio: float = 0.25

    # passage selection
    selection_ratio: float = 0.7
    selection_alpha: float = 0.5  # keyword-frequency vs TF-IDF weight

    # image choreography
    image_weights: tuple[float, float, float] = (0.4, 0.3, 0.3)
    image_placement_floor: float = 0.25
    image_min_side: int = 200
    image_aspect_limit: float = 3.0

    # planning
    max_subqueries: int = 6
    qdg_max_retries: int = 3
    expansion_count: int = 4

    # runtime
    per_source_timeout: float = 8.0
    max_inflight_model_calls: int = 8
    cache_ttl: float = 900.0  # seconds

    @property
    def chunk_overlap(self) -> int:
        return int(self.chunk_size * self.chunk_overlap_ratio)


def validate_config(cfg: PipelineConfig) -> list[str]:
    """Return every violated invariant (empty list means the config is ok)."""
    violations: list[str] = []
    for name in (
        "dedup_threshold",
        "timeline_merge_threshold",
        "citation_fallback_threshold",
        "image_relevance_threshold",
    ):
        value = getattr(cfg, name)
        if not 0.0 <= value <= 1.0:
            violations.append(f"{name}: threshold out of range [0,1], got {value}")
    if not 0.0 <= cfg.chunk_overlap_ratio < 1.0:
        violations.append(
            f"chunk_overlap_ratio: must be in [0,1), got {cfg.chunk_overlap_ratio}"
        )
    if cfg.chunk_size < 1:
        violations.append(f"chunk_size: must be >= 1, got {cfg.chunk_size}")
    if not 0.0 < cfg.selection_ratio <= 1.0:
        violations.append(
            f"selection_ratio: must be in (0,1], got {cfg.selection_ratio}"
        )
    if not 0.0 <= cfg.selection_alpha <= 1.0:
        violations.append(
            f"selection_alpha: must be in [0,1], got {cfg.selection_alpha}"
        )
    if len(cfg.image_weights) != 3 or any(w < 0 for w in cfg.image_weights):
        violations.append("image_weights: must be three nonnegative weights")
    elif abs(sum(cfg.image_weights) - 1.0) > 1e-9:
        violations.append(
            f"image_weights: weights must sum to 1, got {sum(cfg.image_weights)}"
        )
    if cfg.max_subqueries < 1:
        violations.append(f"max_subqueries: must be >= 1, got {cfg.max_subqueries}")
    if cfg.qdg_max_retries < 1:
        violations.append(f"qdg_max_retries: must be >= 1, got {cfg.qdg_max_retries}")
    if cfg.expansion_count < 0:
        violations.append(f"expansion_count: must be >= 0, got {cfg.expansion_count}")
    if cfg.per_source_timeout <= 0:
        violations.append(
            f"per_source_timeout: must be positive, got {cfg.per_source_timeout}"
        )
    if cfg.max_inflight_model_calls < 1:
        violations.append(
            f"max_inflight_model_calls: must be >= 1, got {cfg.max_inflight_model_calls}"
        )
    return violations


def _parse_weights(raw) -> tuple[float, ...]:
    # accepts "0.4,0.3,0.3", a JSON list string, or an already-parsed list
    if isinstance(raw, str):
        text = raw.strip()
        raw = json.loads(text) if text.startswith("[") else text.split(",")
    return tuple(float(v) for v in raw)


def load_config(path: str | Path | None = None, env: dict | None = None) -> PipelineConfig:
    """Build a config from defaults, an optional JSON file, and env overrides.

    Raises ValueError when the resulting config violates an invariant.
    """
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f.name for f in fields(PipelineConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        values.update(data)

    defaults = PipelineConfig()
    for f in fields(PipelineConfig):
        raw = env.get(f.name.upper())
        if raw is None:
            continue
        default = getattr(defaults, f.name)
        if isinstance(default, tuple):
            values[f.name] = _parse_weights(raw)
        elif isinstance(default, int):
            values[f.name] = int(raw)
        else:
            values[f.name] = float(raw)

    if "image_weights" in values:
        values["image_weights"] = _parse_weights(values["image_weights"])
    cfg = PipelineConfig(**values)
    violations = validate_config(cfg)
    if violations:
        raise ValueError("invalid config: " + "; ".join(violations))
    return cfg
