"""Query-decomposition graph: planning, validation, and scheduling.

A complex query becomes a DAG of sub-queries; directed edges point from a
parent whose answer a child needs. Node identity is the normalized
sub-query text (trimmed, whitespace-collapsed) because the planner model
references nodes by text.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional

from .config import PipelineConfig
from .gateway.base import Gateway, GenerationParams
from .jsonparse import as_bool, as_str_list, parse_model_json
from .prompts import build_query_analysis_prompt

logger = logging.getLogger(__name__)

_WS_RE = re.compile(r"\s+")


def normalize_subquery(text: str) -> str:
    return _WS_RE.sub(" ", text.strip())


@dataclass(frozen=True)
class QdgAnalysis:
    is_complex: bool
    sub_queries: tuple[str, ...] = ()
    parent_child: tuple[tuple[str, str], ...] = ()


@dataclass
class Node:
    id: str  # normalized sub-query text
    sub_query: str
    answer: Optional[str] = None
    failed: bool = False


@dataclass
class QDG:
    root_query: str
    nodes: list[Node] = field(default_factory=list)
    edges: list[tuple[str, str]] = field(default_factory=list)  # (parent id, child id)

    @property
    def is_terminal(self) -> bool:
        return len(self.nodes) == 1 and not self.edges

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(f"no such node: {node_id}")

    def parents(self, node_id: str) -> list[str]:
        return [p for p, c in self.edges if c == node_id]

    def children(self, node_id: str) -> list[str]:
        return [c for p, c in self.edges if p == node_id]

    def leaves(self) -> list[Node]:
        with_children = {p for p, _ in self.edges}
        return [n for n in self.nodes if n.id not in with_children]


def parse_analysis(text: str) -> Optional[QdgAnalysis]:
    """Parse the planner's dictionary-format reply (strict JSON or a
    Python-style literal with single quotes / True / False)."""
    data = parse_model_json(text)
    if not isinstance(data, dict):
        return None
    is_complex = as_bool(data.get("is_complex"), default=False)
    sub_queries = tuple(normalize_subquery(q) for q in as_str_list(data.get("sub_queries")))
    pairs = []
    raw_pairs = data.get("parent_child") or []
    if not isinstance(raw_pairs, (list, tuple)):
        return None
    for item in raw_pairs:
        if isinstance(item, dict) and "parent" in item and "child" in item:
            pairs.append(
                (normalize_subquery(str(item["parent"])), normalize_subquery(str(item["child"])))
            )
        elif isinstance(item, (list, tuple)) and len(item) == 2:
            pairs.append((normalize_subquery(str(item[0])), normalize_subquery(str(item[1]))))
        else:
            return None
    return QdgAnalysis(is_complex=is_complex, sub_queries=sub_queries, parent_child=tuple(pairs))


def validate_analysis(analysis: QdgAnalysis, max_subqueries: int = 6) -> list[str]:
    """Return every violation found (empty list = valid analysis)."""
    violations: list[str] = []
    subs = list(analysis.sub_queries)
    if not analysis.is_complex:
        if subs or analysis.parent_child:
            violations.append(
                "simple query must have empty sub_queries and parent_child lists"
            )
        return violations

    if len(subs) < 2:
        violations.append("complex query must decompose into at least 2 sub-queries")
    if len(subs) > max_subqueries:
        violations.append(f"count exceeds {max_subqueries}: got {len(subs)} sub-queries")
    seen = set()
    for q in subs:
        if q in seen:
            violations.append(f"duplicate sub-query: {q!r}")
        seen.add(q)
    known = set(subs)
    for parent, child in analysis.parent_child:
        if parent not in known:
            violations.append(f"dangling parent reference: {parent!r}")
        if child not in known:
            violations.append(f"dangling child reference: {child!r}")
        if parent == child:
            violations.append(f"self-edge on {parent!r}")

    # cycle detection over the declared edges (DFS, three-color)
    adjacency: dict[str, list[str]] = {q: [] for q in known}
    for parent, child in analysis.parent_child:
        if parent in adjacency and child in adjacency:
            adjacency[parent].append(child)
    color: dict[str, int] = {}

    def dfs(node: str) -> bool:
        color[node] = 1
        for nxt in adjacency[node]:
            state = color.get(nxt, 0)
            if state == 1:
                return True
            if state == 0 and dfs(nxt):
                return True
        color[node] = 2
        return False

    for q in subs:
        if color.get(q, 0) == 0 and q in adjacency:
            if dfs(q):
                violations.append("cycle in parent_child relation")
                break
    return violations


def qdg_from_analysis(query: str, analysis: QdgAnalysis) -> QDG:
    if not analysis.is_complex:
        root = normalize_subquery(query)
        return QDG(root_query=query, nodes=[Node(id=root, sub_query=root)])
    nodes = [Node(id=q, sub_query=q) for q in analysis.sub_queries]
    return QDG(root_query=query, nodes=nodes, edges=list(analysis.parent_child))


def terminal_qdg(query: str) -> QDG:
    return qdg_from_analysis(query, QdgAnalysis(is_complex=False))


async def build_qdg(query: str, gw: Gateway, cfg: PipelineConfig) -> QDG:
    """Plan the QDG for a preprocessed query.

    Invalid planner output is regenerated up to cfg.qdg_max_retries
    attempts in total, after which the query degrades to a single-node
    (Terminal) graph: planning never aborts the pipeline.
    """
    prompt = build_query_analysis_prompt(query)
    params = GenerationParams(temperature=0.2)
    for attempt in range(cfg.qdg_max_retries):
        reply = await gw.chat_text(prompt, params, template_id="query_analysis")
        analysis = parse_analysis(reply)
        if analysis is None:
            logger.warning("QDG planner reply unparseable (attempt %d)", attempt + 1)
            continue
        violations = validate_analysis(analysis, cfg.max_subqueries)
        if violations:
            logger.warning(
                "QDG analysis invalid (attempt %d): %s", attempt + 1, "; ".join(violations)
            )
            continue
        return qdg_from_analysis(query, analysis)
    logger.warning("QDG planning failed %d times; degrading to Terminal", cfg.qdg_max_retries)
    return terminal_qdg(query)


def topo_layers(g: QDG) -> list[list[Node]]:
    """Longest-path layering: every node lands strictly below all parents;
    nodes within one layer are mutually independent and may run in parallel.
    """
    order = {n.id: i for i, n in enumerate(g.nodes)}
    indegree = {n.id: 0 for n in g.nodes}
    for parent, child in g.edges:
        indegree[child] += 1
    depth = {n.id: 0 for n in g.nodes}
    ready = [n.id for n in g.nodes if indegree[n.id] == 0]
    processed = 0
    while ready:
        ready.sort(key=order.__getitem__)
        next_ready = []
        for node_id in ready:
            processed += 1
            for child in g.children(node_id):
                depth[child] = max(depth[child], depth[node_id] + 1)
                indegree[child] -= 1
                if indegree[child] == 0:
                    next_ready.append(child)
        ready = next_ready
    if processed != len(g.nodes):
        raise ValueError("QDG contains a cycle")
    layer_count = max(depth.values(), default=-1) + 1
    layers: list[list[Node]] = [[] for _ in range(layer_count)]
    for node in g.nodes:
        layers[depth[node.id]].append(node)
    return layers


def ancestors(g: QDG, node_id: str) -> list[Node]:
    """All transitive parents, root-first; deterministic order
    (layer index, then node id)."""
    g.node(node_id)  # raises on unknown node
    seen: set[str] = set()
    stack = list(g.parents(node_id))
    while stack:
        current = stack.pop()
        if current in seen:
            continue
        seen.add(current)
        stack.extend(g.parents(current))
    if not seen:
        return []
    depth: dict[str, int] = {}
    for layer_index, layer in enumerate(topo_layers(g)):
        for node in layer:
            depth[node.id] = layer_index
    ordered = sorted(seen, key=lambda nid: (depth[nid], nid))
    return [g.node(nid) for nid in ordered]
