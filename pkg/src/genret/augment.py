"""Indexing-phase inputs: synthetic queries and random token spans."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Protocol

from .corpus import Document
from .docid import Bm25Stats, tfidf_weights
from .errors import GenRetError

DEFAULT_SPAN_LEN = 64
DEFAULT_QUERIES_PER_DOC = 5

_PUNCT_SENTENCE_ENDS = {".", "!", "?", ";"}


@dataclass(frozen=True)
class IndexingPair:
    input_text: str
    doc_key: str
    source: str  # "synthetic_query" or "span"


def random_spans(
    doc: Document, n: int, span_len: int = DEFAULT_SPAN_LEN, seed: int = 0
) -> list[IndexingPair]:
    """n token spans of span_len with uniformly seeded start offsets; short docs yield themselves."""
    if not doc.tokens or n <= 0:
        return []
    rng = random.Random(seed)
    pairs = []
    for _ in range(n):
        if len(doc.tokens) <= span_len:
            text = " ".join(doc.tokens)
        else:
            start = rng.randrange(len(doc.tokens) - span_len + 1)
            text = " ".join(doc.tokens[start : start + span_len])
        pairs.append(IndexingPair(text, doc.doc_key, "span"))
    return pairs


class QueryGenerator(Protocol):
    def queries(self, doc: Document, n: int) -> list[str]: ...


class TfidfQueryGenerator:
    """Deterministic query double: top-TF-IDF fragments rendered as keyword strings."""

    def __init__(self, stats: Bm25Stats, fragment_len: int = 8):
        self._stats = stats
        self._fragment_len = fragment_len

    def _fragments(self, doc: Document) -> list[list[str]]:
        fragments: list[list[str]] = []
        current: list[str] = []
        for tok in doc.tokens:
            if tok in _PUNCT_SENTENCE_ENDS or len(current) == self._fragment_len:
                if current:
                    fragments.append(current)
                current = []
                if tok in _PUNCT_SENTENCE_ENDS:
                    continue
            current.append(tok)
        if current:
            fragments.append(current)
        return fragments

    def queries(self, doc: Document, n: int) -> list[str]:
        if n <= 0:
            return []
        if not doc.tokens:
            raise GenRetError(f"cannot generate queries for empty document {doc.doc_key!r}")
        weights = tfidf_weights(doc, self._stats)
        scored = []
        for pos, frag in enumerate(self._fragments(doc)):
            keywords = [t for t in frag if any(c.isalnum() for c in t)]
            if not keywords:
                continue
            deduped = list(dict.fromkeys(keywords))
            scored.append((-sum(weights.get(t, 0.0) for t in deduped), pos, " ".join(deduped)))
        if not scored:
            raise GenRetError(f"no keyword fragments found in document {doc.doc_key!r}")
        scored.sort()
        return [scored[i % len(scored)][2] for i in range(n)]


def synthetic_queries(doc: Document, n: int, generator: QueryGenerator) -> list[IndexingPair]:
    """n generated queries for the document, each paired with its doc_key."""
    return [IndexingPair(q, doc.doc_key, "synthetic_query") for q in generator.queries(doc, n)]
