"""Prompt template assets and the builders that render them.

Templates live under ``templates/`` as versioned text files; slots are
literal ``{Name}`` markers replaced by the builders (plain replacement,
never str.format, because several templates contain JSON braces).
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Sequence

TEMPLATE_IDS = (
    "intent_refusal",
    "intent_clarify",
    "query_rewrite",
    "query_analysis",
    "query_expansion",
    "keyword_extraction",
    "encyclopedia_qa",
    "final_synthesis",
    "info_extraction",
    "citation_source_matching",
    "event_extraction",
    "event_grouping",
    "evaluation",
)

NO_REFERENCES_MARKER = "(no references retrieved)"

_QDG_FEW_SHOT = """Query: What teams reached the 2024 UEFA Champions League final, and what was the score?
Response: {'is_complex': True, 'sub_queries': ['What teams reached the 2024 UEFA Champions League final?', 'What was the score of the 2024 UEFA Champions League final?'], 'parent_child': []}

Query: Who won the Nobel Peace Prize in 2023?
Response: {'is_complex': False, 'sub_queries': [], 'parent_child': []}"""

_ENTITY_FEW_SHOT = """Sentence: President Biden met Chancellor Scholz in Berlin on March 5, 2024.
Extraction result: {"Time": "March 5, 2024", "Location": "Berlin", "Persons": ["Biden", "Scholz"], "Job Titles": ["President", "Chancellor"]}"""


@lru_cache(maxsize=None)
def load_template(template_id: str) -> str:
    if template_id not in TEMPLATE_IDS:
        raise KeyError(f"unknown template id: {template_id}")
    return (
        resources.files("gensearch")
        .joinpath(f"templates/{template_id}.txt")
        .read_text("utf-8")
    )


def render(template_id: str, slots: dict[str, str]) -> str:
    text = load_template(template_id)
    for key, value in slots.items():
        text = text.replace("{" + key + "}", value)
    return text


@lru_cache(maxsize=1)
def facet_definitions() -> dict[str, str]:
    raw = resources.files("gensearch").joinpath("data/facets.json").read_text("utf-8")
    return json.loads(raw)


# -- builders ----------------------------------------------------------------


def build_intent_refusal_prompt(query: str) -> str:
    return render("intent_refusal", {"Query": query})


def build_intent_clarify_prompt(query: str) -> str:
    return render("intent_clarify", {"Query": query})


def build_rewrite_prompt(query: str, local_time: str, location: str) -> str:
    return render(
        "query_rewrite",
        {"Query": query, "Local Time": local_time, "Location": location or "unknown"},
    )


def build_query_analysis_prompt(query: str) -> str:
    return render("query_analysis", {"Query": query, "Few-Shot Examples": _QDG_FEW_SHOT})


def build_expansion_prompt(query: str, count: int) -> str:
    return render("query_expansion", {"Query": query, "Count": str(count)})


def build_keyword_prompt(sub_query: str) -> str:
    return render("keyword_extraction", {"Query": sub_query})


def build_answer_prompt(
    sub_query: str,
    ancestor_qas: Sequence[tuple[str, str]],
    passages: Sequence[str],
) -> str:
    if ancestor_qas:
        qa_lines = []
        for question, answer in ancestor_qas:
            qa_lines.append(f"Q: {question}")
            qa_lines.append(f"A: {answer}")
        related = "\n".join(qa_lines)
    else:
        related = "(none)"
    if passages:
        materials = "\n".join(f"[{i}] {text}" for i, text in enumerate(passages, start=1))
    else:
        materials = NO_REFERENCES_MARKER
    return render(
        "encyclopedia_qa",
        {"Sub-Query": sub_query, "Related QA": related, "Reference Materials": materials},
    )


def build_synthesis_prompt(query: str, leaf_qas: Sequence[tuple[str, str]]) -> str:
    lines = []
    for question, answer in leaf_qas:
        lines.append(f"Q: {question}")
        lines.append(f"A: {answer}")
    return render("final_synthesis", {"Query": query, "Leaf QAs": "\n".join(lines)})


def build_entity_prompt(sentence: str) -> str:
    return render(
        "info_extraction", {"Sentence": sentence, "Few-Shot Examples": _ENTITY_FEW_SHOT}
    )


def build_citation_prompt(
    sentence: str,
    entities: dict[str, list[str]],
    documents: Sequence[str],
) -> str:
    def join(values: list[str]) -> str:
        return ", ".join(values) if values else "-"

    doc_block = "\n".join(f"[{i}] {doc}" for i, doc in enumerate(documents, start=1))
    return render(
        "citation_source_matching",
        {
            "Sentence": sentence,
            "Time": join(entities.get("times", [])),
            "Location": join(entities.get("locations", [])),
            "Person": join(entities.get("persons", [])),
            "Job Title": join(entities.get("job_titles", [])),
            "Numbers": join(entities.get("numbers", [])),
            "Reference Documents": doc_block,
        },
    )


def build_event_prompt(passage_text: str) -> str:
    return render("event_extraction", {"Passage": passage_text})


def build_grouping_prompt(events: Sequence[tuple[str, str, str]]) -> str:
    lines = [
        f"[{i}] {time} | {title} | {summary}"
        for i, (time, title, summary) in enumerate(events)
    ]
    return render("event_grouping", {"Events": "\n".join(lines)})


def build_judge_prompt(facet: str, query: str, answer: str, current_date: str) -> str:
    definitions = facet_definitions()
    if facet not in definitions:
        raise KeyError(f"unknown evaluation facet: {facet}")
    definition = definitions[facet].replace("{Current Date}", current_date)
    return render(
        "evaluation",
        {"Metric Title": facet, "Metric Definition": definition, "Query": query, "Answer": answer},
    )
