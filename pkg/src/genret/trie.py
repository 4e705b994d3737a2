"""Prefix tree over ID token sequences; the decoding constraint and the ID->doc resolver."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .docid import IdAssignment
from .errors import TrieError
from .tokenizer import EOS

_MAGIC = "idtrie"
_VERSION = 1


class _Node:
    __slots__ = ("children", "doc_key")

    def __init__(self):
        self.children: dict[int, _Node] = {}
        self.doc_key: str | None = None


class IdTrie:
    """Immutable-after-build prefix tree; every inserted ID ends on an EOS edge."""

    def __init__(self):
        self._root = _Node()
        self._size = 0
        self._max_depth = 0

    @classmethod
    def build(cls, assignment: IdAssignment) -> "IdTrie":
        trie = cls()
        for doc_id in assignment.doc_ids():
            trie._insert(doc_id.id_tokens, doc_id.doc_key)
        return trie

    def _insert(self, id_tokens: tuple[int, ...], doc_key: str) -> None:
        if not id_tokens or id_tokens[-1] != EOS:
            raise TrieError(f"ID for {doc_key!r} is not EOS-terminated")
        node = self._root
        for token in id_tokens:
            node = node.children.setdefault(token, _Node())
        if node.doc_key is not None:
            raise TrieError(f"duplicate ID insertion for {doc_key!r}")
        node.doc_key = doc_key
        self._size += 1
        self._max_depth = max(self._max_depth, len(id_tokens))

    def __len__(self) -> int:
        return self._size

    def max_depth(self) -> int:
        return self._max_depth

    def _walk(self, prefix: tuple[int, ...]) -> _Node:
        node = self._root
        for token in prefix:
            child = node.children.get(token)
            if child is None:
                raise TrieError(f"prefix {prefix!r} is not a path in the trie")
            node = child
        return node

    def allowed_next(self, prefix: Iterable[int]) -> tuple[int, ...]:
        """Token ids that may legally extend `prefix`; empty only at a terminal."""
        prefix = tuple(prefix)
        return tuple(sorted(self._walk(prefix).children))

    def lookup(self, id_tokens: Iterable[int]) -> str:
        """doc_key stored at the terminal reached by a complete, EOS-terminated ID."""
        id_tokens = tuple(id_tokens)
        if not id_tokens or id_tokens[-1] != EOS:
            raise TrieError("lookup requires an EOS-terminated ID")
        try:
            node = self._walk(id_tokens)
        except TrieError:
            raise TrieError(f"ID {id_tokens!r} not found") from None
        if node.doc_key is None:
            raise TrieError(f"ID {id_tokens!r} not found")
        return node.doc_key

    def iter_ids(self) -> Iterator[tuple[tuple[int, ...], str]]:
        """All (id_tokens, doc_key) pairs in lexicographic token-id order."""
        stack: list[tuple[int, ...]] = []

        def visit(node: _Node) -> Iterator[tuple[tuple[int, ...], str]]:
            if node.doc_key is not None:
                yield tuple(stack), node.doc_key
            for token in sorted(node.children):
                stack.append(token)
                yield from visit(node.children[token])
                stack.pop()

        yield from visit(self._root)

    def save(self, path: str | Path) -> None:
        nodes: list[dict] = []

        def serialize(node: _Node) -> int:
            idx = len(nodes)
            rec: dict = {"children": {}}
            if node.doc_key is not None:
                rec["doc_key"] = node.doc_key
            nodes.append(rec)
            for token in sorted(node.children):
                rec["children"][str(token)] = serialize(node.children[token])
            return idx

        serialize(self._root)
        payload = {"magic": _MAGIC, "version": _VERSION, "count": self._size, "nodes": nodes}
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "IdTrie":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("magic") != _MAGIC or payload.get("version") != _VERSION:
            raise TrieError(f"{path}: not a version-{_VERSION} trie file")
        raw_nodes = payload["nodes"]
        trie = cls()

        def materialize(idx: int, depth: int) -> _Node:
            rec = raw_nodes[idx]
            node = _Node()
            node.doc_key = rec.get("doc_key")
            if node.doc_key is not None:
                trie._size += 1
                trie._max_depth = max(trie._max_depth, depth)
            for token, child_idx in rec["children"].items():
                node.children[int(token)] = materialize(child_idx, depth + 1)
            return node

        trie._root = materialize(0, 0)
        if trie._size != payload.get("count"):
            raise TrieError(f"{path}: node count does not match header")
        return trie
