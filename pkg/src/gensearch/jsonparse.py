"""Tolerant parsing of model-produced JSON.

Models emit strict JSON, Python-style dict literals (single quotes,
True/False/None), or either of those wrapped in prose or markdown fences.
Parsing never raises; failures return None and the caller applies its
documented fallback.
"""

from __future__ import annotations

import ast
import json
import re

_FENCE_RE = re.compile(r"```(?:json|python)?\s*(.*?)```", re.DOTALL)


def _candidates(text: str) -> list[str]:
    candidates = [text.strip()]
    for m in _FENCE_RE.finditer(text):
        candidates.append(m.group(1).strip())
    for opener, closer in ("{}", "[]"):
        start = text.find(opener)
        end = text.rfind(closer)
        if start != -1 and end > start:
            candidates.append(text[start : end + 1])
    return candidates


def _parse_one(candidate: str):
    if not candidate:
        return None
    try:
        return json.loads(candidate)
    except (json.JSONDecodeError, ValueError):
        pass
    try:
        return ast.literal_eval(candidate)
    except (ValueError, SyntaxError, MemoryError, RecursionError):
        return None


def parse_model_json(text: str | None):
    """Best-effort parse of a dict/list from model output; None on failure."""
    if not text:
        return None
    for candidate in _candidates(text):
        value = _parse_one(candidate)
        if isinstance(value, (dict, list)):
            return value
    return None


_TRUE_STRINGS = {"true", "yes", "y", "1"}
_FALSE_STRINGS = {"false", "no", "n", "0"}


def as_bool(value, default: bool = False) -> bool:
    """Lift model-flavored booleans (True, "Yes", "true", 1) to bool."""
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return bool(value)
    if isinstance(value, str):
        v = value.strip().lower()
        if v in _TRUE_STRINGS:
            return True
        if v in _FALSE_STRINGS:
            return False
    return default


def as_str_list(value) -> list[str]:
    """Lift a scalar or list-ish value to a list of non-empty strings."""
    if value is None:
        return []
    if isinstance(value, str):
        return [value] if value.strip() else []
    if isinstance(value, (list, tuple)):
        out = []
        for item in value:
            if isinstance(item, str):
                if item.strip():
                    out.append(item)
            elif item is not None:
                out.append(str(item))
        return out
    return [str(value)]
