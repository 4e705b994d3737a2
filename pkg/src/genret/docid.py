"""Document ID construction: extractive, BM25-ranked, and keyphrase schemes, plus uniqueness repair."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .corpus import Document
from .errors import DocIdError
from .tokenizer import EOS, SEP, SEP_TOKEN, Vocabulary

if TYPE_CHECKING:
    from .keyphrase import KeyphraseGenerator

ID_METHODS = ("first_k", "bm25_top_k", "cluster", "acid")

BM25_K1 = 0.9
BM25_B = 0.4
BM25_MIN_DOC_TF = 2
BM25_MIN_COLL_FREQ = 5


@dataclass(frozen=True)
class DocId:
    """A document's identifier as display text plus its EOS-terminated token ids."""

    doc_key: str
    method: str
    id_text: str
    id_tokens: tuple[int, ...]

    def __post_init__(self):
        if not self.id_tokens or self.id_tokens[-1] != EOS or EOS in self.id_tokens[:-1]:
            raise DocIdError(
                f"id_tokens for {self.doc_key!r} must end with exactly one EOS"
            )


@dataclass(frozen=True)
class IdAssignment:
    """Corpus-wide doc<->ID bijection."""

    forward: dict[str, DocId]
    reverse: dict[tuple[int, ...], str]

    @classmethod
    def from_doc_ids(cls, ids: Iterable[DocId]) -> "IdAssignment":
        forward: dict[str, DocId] = {}
        reverse: dict[tuple[int, ...], str] = {}
        for did in ids:
            if did.doc_key in forward:
                raise DocIdError(f"duplicate doc_key {did.doc_key!r} in assignment")
            if did.id_tokens in reverse:
                raise DocIdError(
                    f"documents {reverse[did.id_tokens]!r} and {did.doc_key!r} share an ID"
                )
            forward[did.doc_key] = did
            reverse[did.id_tokens] = did.doc_key
        return cls(forward, reverse)

    def __len__(self) -> int:
        return len(self.forward)

    def doc_ids(self) -> list[DocId]:
        return list(self.forward.values())


@dataclass(frozen=True)
class Bm25Stats:
    """Corpus term statistics over truncated token streams."""

    doc_freq: dict[str, int]
    coll_freq: dict[str, int]
    doc_len: dict[str, int]
    avgdl: float
    num_docs: int
    term_freqs: dict[str, Counter]


def first_k_tokens_id(doc: Document, vocab: Vocabulary, k: int = 30) -> DocId:
    """ID from the document's first k tokens."""
    if k < 1:
        raise DocIdError("k must be >= 1")
    if not doc.tokens:
        raise DocIdError(f"document {doc.doc_key!r} is empty; no first-k ID derivable")
    id_text = " ".join(doc.tokens[:k])
    return DocId(doc.doc_key, "first_k", id_text, tuple(vocab.encode(id_text)) + (EOS,))


def build_bm25_stats(docs: Sequence[Document]) -> Bm25Stats:
    doc_freq: Counter[str] = Counter()
    coll_freq: Counter[str] = Counter()
    doc_len: dict[str, int] = {}
    term_freqs: dict[str, Counter] = {}
    for d in docs:
        tf = Counter(d.tokens)
        term_freqs[d.doc_key] = tf
        doc_len[d.doc_key] = len(d.tokens)
        doc_freq.update(tf.keys())
        coll_freq.update(tf)
    n = len(docs)
    avgdl = sum(doc_len.values()) / n if n else 0.0
    return Bm25Stats(dict(doc_freq), dict(coll_freq), doc_len, avgdl, n, term_freqs)


def bm25_score(
    term: str, doc_key: str, stats: Bm25Stats, k1: float = BM25_K1, b: float = BM25_B
) -> float:
    """Okapi score of a term occurring in a document.

    idf uses the nonnegative log(1 + (N - n + 0.5)/(n + 0.5)) form; the term
    frequency component saturates at k1 + 1.
    """
    if doc_key not in stats.term_freqs:
        raise DocIdError(f"unknown doc_key {doc_key!r}")
    f = stats.term_freqs[doc_key].get(term, 0)
    if f == 0:
        return 0.0
    n = stats.doc_freq.get(term, 0)
    idf = math.log(1.0 + (stats.num_docs - n + 0.5) / (n + 0.5))
    dl = stats.doc_len[doc_key]
    tf_component = f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * dl / stats.avgdl))
    return idf * tf_component


def eligible_terms(
    doc: Document,
    stats: Bm25Stats,
    min_doc_tf: int = BM25_MIN_DOC_TF,
    min_coll_freq: int = BM25_MIN_COLL_FREQ,
) -> list[str]:
    """Unique document terms allowed into a BM25 ID: frequent in the doc or in the corpus."""
    tf = stats.term_freqs.get(doc.doc_key)
    if tf is None:
        raise DocIdError(f"unknown doc_key {doc.doc_key!r}")
    return [
        t
        for t in sorted(tf)
        if tf[t] >= min_doc_tf or stats.coll_freq.get(t, 0) >= min_coll_freq
    ]


def bm25_top_k_id(doc: Document, stats: Bm25Stats, vocab: Vocabulary, k: int = 30) -> DocId:
    """ID from the document's top-k eligible terms ranked by BM25 score."""
    terms = eligible_terms(doc, stats)
    if not terms:
        raise DocIdError(f"document {doc.doc_key!r} has no BM25-eligible terms")
    ranked = sorted(terms, key=lambda t: (-bm25_score(t, doc.doc_key, stats), t))
    id_text = " ".join(ranked[: min(k, len(ranked))])
    return DocId(doc.doc_key, "bm25_top_k", id_text, tuple(vocab.encode(id_text)) + (EOS,))


def tfidf_weights(doc: Document, stats: Bm25Stats) -> dict[str, float]:
    """Sparse TF-IDF weights of a document's terms (smoothed idf, never negative)."""
    weights: dict[str, float] = {}
    for term, f in Counter(doc.tokens).items():
        n = stats.doc_freq.get(term, 0)
        idf = math.log((1.0 + stats.num_docs) / (1.0 + n)) + 1.0
        weights[term] = f * idf
    return weights


def acid_id(doc: Document, generator: "KeyphraseGenerator", vocab: Vocabulary) -> DocId:
    """ID from up to 5 generated keyphrases rendered as "(1) ... (2) ..." enumeration."""
    phrases = generator.keyphrases(doc.doc_key, doc.raw_text)
    seen: set[str] = set()
    unique: list[str] = []
    for p in phrases:
        p = p.strip()
        if p and p not in seen:
            seen.add(p)
            unique.append(p)
        if len(unique) == 5:
            break
    if not unique:
        raise DocIdError(f"keyphrase generator produced no phrases for {doc.doc_key!r}")
    id_text = " ".join(f"({i}) {p}" for i, p in enumerate(unique, 1))
    return DocId(doc.doc_key, "acid", id_text, tuple(vocab.encode(id_text)) + (EOS,))


def digit_tokens(n: int) -> list[str]:
    """Decimal digits of a nonnegative integer as individual tokens."""
    if n < 0:
        raise ValueError("expected a nonnegative integer")
    return list(str(n))


def ensure_unique(ids: Iterable[DocId], vocab: Vocabulary) -> IdAssignment:
    """Resolve ID collisions by appending SEP plus an ordinal, in doc_key order.

    Already-unique inputs pass through unchanged; within a collision group the
    smallest doc_key keeps the original ID and later documents get suffixes
    "<sep> 1", "<sep> 2", ... (digits as individual tokens).
    """
    groups: dict[tuple[int, ...], list[DocId]] = {}
    order: list[tuple[int, ...]] = []
    for did in ids:
        if did.id_tokens not in groups:
            order.append(did.id_tokens)
        groups.setdefault(did.id_tokens, []).append(did)

    used: set[tuple[int, ...]] = set(groups)
    result: list[DocId] = []
    for tokens in order:
        members = sorted(groups[tokens], key=lambda d: d.doc_key)
        result.append(members[0])
        ordinal = 1
        for did in members[1:]:
            while True:
                digits = digit_tokens(ordinal)
                suffix_tokens = (SEP,) + tuple(vocab.token_to_id[d] for d in digits)
                candidate = did.id_tokens[:-1] + suffix_tokens + (EOS,)
                ordinal += 1
                if candidate not in used:
                    break
            used.add(candidate)
            text = f"{did.id_text} {SEP_TOKEN} {' '.join(digits)}"
            result.append(DocId(did.doc_key, did.method, text, candidate))
    return IdAssignment.from_doc_ids(result)
