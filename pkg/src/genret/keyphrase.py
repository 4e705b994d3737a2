"""Keyphrase sources behind a single interface: recorded fixtures, a TF-IDF double, and a remote client."""

from __future__ import annotations

import json
import math
from collections import Counter
from pathlib import Path
from typing import Protocol

from .docid import Bm25Stats
from .errors import DocIdError, GenRetError
from .tokenizer import tokenize

MAX_PHRASES = 5


class KeyphraseGenerator(Protocol):
    def keyphrases(self, doc_key: str, text: str) -> list[str]: ...


def load_phrase_fixture(path: str | Path) -> dict[str, list[str]]:
    """Read a recorded-phrase file: one {"doc_key", "phrases"} object per line."""
    table: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                table[obj["doc_key"]] = [str(p) for p in obj["phrases"]][:MAX_PHRASES]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise GenRetError(f"{path}:{lineno}: malformed phrase fixture line") from e
    return table


def save_phrase_fixture(table: dict[str, list[str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for doc_key in sorted(table):
            rec = {"doc_key": doc_key, "phrases": table[doc_key][:MAX_PHRASES]}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


class FixtureKeyphraseGenerator:
    """Replays phrases recorded earlier, for reproducible ID builds."""

    def __init__(self, path: str | Path):
        self._table = load_phrase_fixture(path)

    def keyphrases(self, doc_key: str, text: str) -> list[str]:
        try:
            return list(self._table[doc_key])
        except KeyError:
            raise DocIdError(f"no recorded phrases for doc_key {doc_key!r}") from None


class TfidfKeyphraseGenerator:
    """Deterministic stand-in: the document's top TF-IDF bigrams as phrases."""

    def __init__(self, stats: Bm25Stats):
        self._stats = stats

    def _idf(self, term: str) -> float:
        n = self._stats.doc_freq.get(term, 0)
        return math.log((1.0 + self._stats.num_docs) / (1.0 + n)) + 1.0

    def keyphrases(self, doc_key: str, text: str) -> list[str]:
        tokens = tokenize(text)
        if not tokens:
            raise DocIdError(f"cannot derive keyphrases for empty document {doc_key!r}")
        if len(tokens) == 1:
            return [tokens[0]]
        bigrams = Counter(zip(tokens, tokens[1:]))
        scored = sorted(
            bigrams.items(),
            key=lambda kv: (-kv[1] * (self._idf(kv[0][0]) + self._idf(kv[0][1])), kv[0]),
        )
        return [" ".join(bg) for bg, _ in scored[:MAX_PHRASES]]


class RemoteKeyphraseClient:
    """Asks a phrase server over the NDJSON wire protocol, with bounded retries."""

    def __init__(self, transport, retries: int = 2, credential: str | None = None):
        self._transport = transport
        self._retries = retries
        self._credential = credential

    def keyphrases(self, doc_key: str, text: str) -> list[str]:
        request = {"type": "keyphrases", "text": text, "doc_key": doc_key}
        if self._credential:
            request["credential"] = self._credential
        last_error: Exception | None = None
        for _ in range(self._retries + 1):
            try:
                response = self._transport.request(request)
            except GenRetError as e:
                last_error = e
                continue
            if "error" in response:
                last_error = GenRetError(str(response["error"]))
                continue
            phrases = response.get("phrases")
            if not isinstance(phrases, list):
                last_error = GenRetError("phrase response missing 'phrases' list")
                continue
            return [str(p) for p in phrases][:MAX_PHRASES]
        raise DocIdError(f"keyphrase generation failed for {doc_key!r}: {last_error}")
