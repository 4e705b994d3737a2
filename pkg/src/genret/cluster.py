"""Hierarchical k-means over lightweight document embeddings, yielding digit-token IDs."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Document
from .docid import Bm25Stats, DocId, IdAssignment, digit_tokens, ensure_unique, tfidf_weights
from .errors import DocIdError
from .tokenizer import EOS, Vocabulary

DEFAULT_BRANCHING = 10
DEFAULT_LEAF_MAX = 100
DEFAULT_EMBED_DIM = 64

_KMEANS_MAX_ITER = 100


def _term_row(term: str, seed: int, dim: int) -> np.ndarray:
    # Stable per-term Gaussian row: seeded by sha256 so it never depends on
    # vocabulary order or Python hash randomization.
    digest = hashlib.sha256(f"{seed}:{term}".encode("utf-8")).digest()
    rng = np.random.default_rng(np.frombuffer(digest, dtype=np.uint64))
    return rng.standard_normal(dim)


def embed_document(
    doc: Document,
    stats: Bm25Stats,
    dim: int = DEFAULT_EMBED_DIM,
    seed: int = 0,
    _row_cache: dict | None = None,
) -> np.ndarray:
    """Seeded random projection of the document's TF-IDF vector; empty docs embed to zero."""
    vec = np.zeros(dim)
    rows = _row_cache if _row_cache is not None else {}
    for term, w in tfidf_weights(doc, stats).items():
        row = rows.get(term)
        if row is None:
            row = _term_row(term, seed, dim)
            rows[term] = row
        vec += w * row
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = [points[int(rng.integers(n))]]
    d2 = ((points - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers.append(points[idx])
        d2 = np.minimum(d2, ((points - centers[-1]) ** 2).sum(axis=1))
    return np.stack(centers)


def kmeans(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding.

    Runs at most 100 iterations or until assignments stabilize; an empty
    cluster is repaired by stealing the farthest point from the largest one.
    """
    n = points.shape[0]
    k = min(k, n)
    centers = _kmeans_pp_init(points, k, rng)
    labels = np.full(n, -1)
    for _ in range(_KMEANS_MAX_ITER):
        dists = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dists.argmin(axis=1)
        counts = np.bincount(new_labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            largest = int(counts.argmax())
            members = np.flatnonzero(new_labels == largest)
            farthest = members[dists[members, largest].argmax()]
            new_labels[farthest] = empty
            counts[largest] -= 1
            counts[empty] += 1
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
    return labels


@dataclass
class ClusterNode:
    """One node of the hierarchical clustering; leaves carry doc_keys sorted ascending."""

    children: dict[int, "ClusterNode"] = field(default_factory=dict)
    doc_keys: tuple[str, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


def cluster_tree(
    docs: Sequence[Document],
    stats: Bm25Stats,
    branching: int = DEFAULT_BRANCHING,
    leaf_max: int = DEFAULT_LEAF_MAX,
    seed: int = 0,
    dim: int = DEFAULT_EMBED_DIM,
) -> ClusterNode:
    """Recursively cluster documents until every leaf holds at most leaf_max of them.

    Identical embeddings that k-means cannot separate fall back to a
    round-robin split so recursion always terminates.
    """
    if branching < 2:
        raise DocIdError("branching must be >= 2")
    if leaf_max < 1:
        raise DocIdError("leaf_max must be >= 1")
    keys = sorted(d.doc_key for d in docs)
    if len(keys) != len(set(keys)):
        raise DocIdError("duplicate doc_keys in clustering input")
    by_key = {d.doc_key: d for d in docs}
    row_cache: dict = {}
    emb = np.stack(
        [embed_document(by_key[k], stats, dim=dim, seed=seed, _row_cache=row_cache) for k in keys]
    ) if keys else np.zeros((0, dim))
    rng = np.random.default_rng(seed)

    def split(indices: list[int]) -> ClusterNode:
        if len(indices) <= leaf_max:
            return ClusterNode(doc_keys=tuple(keys[i] for i in indices))
        pts = emb[indices]
        groups: list[list[int]]
        if bool((pts == pts[0]).all()):
            groups = _round_robin(indices, branching)
        else:
            labels = kmeans(pts, branching, rng)
            groups = [
                [indices[j] for j in np.flatnonzero(labels == c)]
                for c in range(labels.max() + 1)
            ]
            groups = [g for g in groups if g]
            if len(groups) <= 1:
                groups = _round_robin(indices, branching)
        node = ClusterNode()
        for label, group in enumerate(groups):
            node.children[label] = split(group)
        return node

    return split(list(range(len(keys))))


def _round_robin(indices: list[int], branching: int) -> list[list[int]]:
    groups: list[list[int]] = [[] for _ in range(min(branching, len(indices)))]
    for pos, idx in enumerate(indices):
        groups[pos % len(groups)].append(idx)
    return groups


def cluster_ids(
    docs: Sequence[Document],
    stats: Bm25Stats,
    vocab: Vocabulary,
    branching: int = DEFAULT_BRANCHING,
    leaf_max: int = DEFAULT_LEAF_MAX,
    seed: int = 0,
    dim: int = DEFAULT_EMBED_DIM,
) -> IdAssignment:
    """Assign every document a digit-token ID: its cluster path plus within-leaf index."""
    tree = cluster_tree(docs, stats, branching, leaf_max, seed, dim)
    doc_ids: list[DocId] = []

    def walk(node: ClusterNode, path_digits: list[str]) -> None:
        if node.is_leaf:
            for idx, key in enumerate(node.doc_keys):
                digits = path_digits + digit_tokens(idx)
                text = " ".join(digits)
                tokens = tuple(vocab.token_to_id[d] for d in digits)
                doc_ids.append(DocId(key, "cluster", text, tokens + (EOS,)))
            return
        for label in sorted(node.children):
            walk(node.children[label], path_digits + digit_tokens(label))

    walk(tree, [])
    return ensure_unique(doc_ids, vocab)
