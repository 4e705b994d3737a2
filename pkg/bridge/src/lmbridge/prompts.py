"""Prompt assembly and output parsing.

The exemplar template is versioned: responses depend on it, so bump
EXEMPLAR_TEMPLATE_VERSION whenever the rendering below changes.
"""

from __future__ import annotations

import re

EXEMPLAR_TEMPLATE_VERSION = 1

KEYPHRASE_INSTRUCTION = (
    "Generate no more than 5 key phrases describing the topics in this document. "
    "Do not include things like the Wikipedia terms and conditions, licenses, or "
    "references section in the list: "
)

_SPLIT_RE = re.compile(r"\n|\(\d+\)")
_LEAD_MARKER_RE = re.compile(r"^\s*(?:\(\d+\)|\d+[.)]|[-*•]+)\s*")


def scoring_prompt(
    query: str,
    exemplars: list[tuple[str, str]],
    prefix_text: str,
    limit: int = 8,
) -> str:
    """Few-shot prompt: one "Query:/ID:" block per exemplar, then the live query.

    The model is asked to continue the final ID line, so the prompt ends right
    after the decoded prefix (or after "ID:" when nothing is decoded yet).
    """
    parts = [f"Query: {q}\nID: {i}\n" for q, i in exemplars[:limit]]
    tail = f"Query: {query}\nID:"
    if prefix_text:
        tail += f" {prefix_text}"
    return "".join(parts) + tail


def keyphrase_prompt(text: str) -> str:
    return f"{KEYPHRASE_INSTRUCTION}{text}\nKey phrases:\n"


def parse_phrases(output: str, limit: int = 5) -> list[str]:
    """Up to `limit` phrases from enumerated or line-separated model output."""
    phrases: list[str] = []
    for piece in _SPLIT_RE.split(output):
        piece = _LEAD_MARKER_RE.sub("", piece)
        cleaned = piece.strip(" \t\r-*:;,.")
        if cleaned:
            phrases.append(cleaned)
        if len(phrases) == limit:
            break
    return phrases
