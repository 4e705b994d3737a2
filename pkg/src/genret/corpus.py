"""Corpus loading, deduplication, truncation, and summary statistics."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import CorpusError
from .tokenizer import tokenize

SPLITS = ("train", "dev", "test", "index")

DEFAULT_DEDUP_PREFIX = 512
DEFAULT_DEDUP_THRESHOLD = 0.95
DEFAULT_MAX_DOC_TOKENS = 4000


@dataclass(frozen=True)
class Document:
    """One corpus document, tokenized at load time. Immutable after construction."""

    doc_key: str
    raw_text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, doc_key: str, text: str) -> "Document":
        return cls(doc_key, text, tuple(tokenize(text)))

    @property
    def char_length(self) -> int:
        return len(self.raw_text)


@dataclass(frozen=True)
class QueryDocPair:
    query_id: str
    query_text: str
    doc_key: str
    split: str


@dataclass(frozen=True)
class CorpusStats:
    num_pairs: int
    avg_query_len: float
    avg_doc_len: float


def load_corpus(
    documents_path: str | Path, pairs_path: str | Path
) -> tuple[list[Document], list[QueryDocPair]]:
    """Load a JSONL document file and a TSV pair file, checking referential integrity."""
    docs = load_documents(documents_path)
    pairs = load_pairs(pairs_path)
    keys = {d.doc_key for d in docs}
    dangling = sorted({p.doc_key for p in pairs if p.doc_key not in keys})
    if dangling:
        raise CorpusError(f"{pairs_path}: pairs reference unknown doc_keys: {', '.join(dangling)}")
    return docs, pairs


def load_documents(path: str | Path) -> list[Document]:
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {e}") from e
            if not isinstance(obj, dict) or not isinstance(obj.get("doc_key"), str) or not isinstance(obj.get("text"), str):
                raise CorpusError(f'{path}:{lineno}: expected {{"doc_key": str, "text": str}}')
            key = obj["doc_key"]
            if key in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate doc_key {key!r}")
            seen.add(key)
            docs.append(Document.from_text(key, obj["text"]))
    return docs


def load_pairs(path: str | Path) -> list[QueryDocPair]:
    pairs: list[QueryDocPair] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise CorpusError(f"{path}:{lineno}: expected 4 tab-separated columns, got {len(cols)}")
            query_id, query_text, doc_key, split = cols
            if split not in SPLITS:
                raise CorpusError(f"{path}:{lineno}: unknown split {split!r} (expected one of {SPLITS})")
            pairs.append(QueryDocPair(query_id, query_text, doc_key, split))
    return pairs


def save_corpus(
    docs: Sequence[Document],
    pairs: Sequence[QueryDocPair],
    documents_path: str | Path,
    pairs_path: str | Path,
) -> None:
    """Write the canonical on-disk form; load(save(load(x))) is value-identical."""
    save_documents(docs, documents_path)
    save_pairs(pairs, pairs_path)


def save_documents(docs: Sequence[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for d in docs:
            f.write(json.dumps({"doc_key": d.doc_key, "text": d.raw_text}, ensure_ascii=False) + "\n")


def save_pairs(pairs: Sequence[QueryDocPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(f"{p.query_id}\t{p.query_text}\t{p.doc_key}\t{p.split}\n")


def _prefix_counter(doc: Document, prefix_len: int) -> Counter[str]:
    return Counter(doc.tokens[:prefix_len])


def prefix_overlap(a: Document, b: Document, prefix_len: int = DEFAULT_DEDUP_PREFIX) -> float:
    """Multiset token overlap of the two documents' prefixes, in [0, 1].

    Overlap = |multiset intersection| / max(prefix lengths). Two empty prefixes
    count as fully overlapping; one empty prefix as disjoint.
    """
    ca, cb = _prefix_counter(a, prefix_len), _prefix_counter(b, prefix_len)
    la, lb = sum(ca.values()), sum(cb.values())
    if la == 0 and lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return 0.0
    inter = sum((ca & cb).values())
    return inter / max(la, lb)


def duplicate_map(
    docs: Sequence[Document],
    prefix_len: int = DEFAULT_DEDUP_PREFIX,
    threshold: float = DEFAULT_DEDUP_THRESHOLD,
) -> dict[str, str]:
    """Map each removed duplicate's doc_key to its retained representative.

    Duplicate groups are connected components of the pairwise overlap >= threshold
    relation; the representative is the lexicographically smallest doc_key so the
    result is deterministic regardless of comparison schedule.
    """
    n = len(docs)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    counters = [_prefix_counter(d, prefix_len) for d in docs]
    lengths = [sum(c.values()) for c in counters]
    for i in range(n):
        for j in range(i + 1, n):
            la, lb = lengths[i], lengths[j]
            if la == 0 and lb == 0:
                ov = 1.0
            elif la == 0 or lb == 0:
                ov = 0.0
            else:
                ov = sum((counters[i] & counters[j]).values()) / max(la, lb)
            if ov >= threshold:
                parent[find(i)] = find(j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    mapping: dict[str, str] = {}
    for members in groups.values():
        if len(members) < 2:
            continue
        keys = sorted(docs[i].doc_key for i in members)
        rep = keys[0]
        for k in keys[1:]:
            mapping[k] = rep
    return mapping


def deduplicate(
    docs: Sequence[Document],
    prefix_len: int = DEFAULT_DEDUP_PREFIX,
    threshold: float = DEFAULT_DEDUP_THRESHOLD,
) -> list[Document]:
    """Drop near-duplicate documents, keeping the smallest doc_key of each group."""
    removed = set(duplicate_map(docs, prefix_len, threshold))
    return [d for d in docs if d.doc_key not in removed]


def truncate(doc: Document, max_tokens: int = DEFAULT_MAX_DOC_TOKENS) -> Document:
    """Document limited to its first max_tokens tokens; raw text is untouched."""
    if len(doc.tokens) <= max_tokens:
        return doc
    return Document(doc.doc_key, doc.raw_text, doc.tokens[:max_tokens])


def compute_stats(docs: Sequence[Document], pairs: Sequence[QueryDocPair]) -> CorpusStats:
    """Pair count and mean character lengths of queries and documents."""
    avg_q = sum(len(p.query_text) for p in pairs) / len(pairs) if pairs else 0.0
    avg_d = sum(d.char_length for d in docs) / len(docs) if docs else 0.0
    return CorpusStats(num_pairs=len(pairs), avg_query_len=avg_q, avg_doc_len=avg_d)
