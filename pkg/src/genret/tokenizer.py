"""Deterministic word-level tokenizer and the vocabulary shared by documents, queries, and IDs."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import GenRetError

BOS, EOS, UNK, SEP = 0, 1, 2, 3
BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, SEP_TOKEN = "<bos>", "<eos>", "<unk>", "<sep>"
SPECIAL_TOKENS = (BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, SEP_TOKEN)
DIGIT_TOKENS = tuple("0123456789")

_SPECIAL_RE = re.compile("(" + "|".join(re.escape(t) for t in SPECIAL_TOKENS) + ")")
_WORD_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split into word tokens and single-character punctuation tokens.

    Special marker literals such as "<sep>" survive as one token so that ID
    suffixes round-trip through encode.
    """
    tokens: list[str] = []
    for part in _SPECIAL_RE.split(text.lower()):
        if part in SPECIAL_TOKENS:
            tokens.append(part)
        else:
            tokens.extend(_WORD_RE.findall(part))
    return tokens


def normalize(text: str) -> str:
    """Canonical surface form of `text`: its tokens joined by single spaces."""
    return " ".join(tokenize(text))


@dataclass(frozen=True)
class Vocabulary:
    """Immutable token<->id bijection with reserved specials and digit tokens."""

    token_to_id: dict[str, int]
    id_to_token: tuple[str, ...]

    def __post_init__(self):
        if len(self.token_to_id) != len(self.id_to_token):
            raise GenRetError("vocabulary token/id maps are not a bijection")
        for tok, want in zip(SPECIAL_TOKENS, range(4)):
            if self.token_to_id.get(tok) != want:
                raise GenRetError(f"special token {tok!r} must have id {want}")
        for d in DIGIT_TOKENS:
            if d not in self.token_to_id:
                raise GenRetError(f"digit token {d!r} missing from vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def encode(self, text: str) -> list[int]:
        """Token ids of `text`; out-of-vocabulary tokens map to UNK."""
        get = self.token_to_id.get
        return [get(t, UNK) for t in tokenize(text)]

    def decode(self, ids: Iterable[int]) -> str:
        """Surface form of `ids`, tokens joined by single spaces."""
        out = []
        for i in ids:
            if not 0 <= i < len(self.id_to_token):
                raise GenRetError(f"token id {i} outside vocabulary range")
            out.append(self.id_to_token[i])
        return " ".join(out)

    def save(self, path: str | Path) -> None:
        lines = [f"{tok}\t{i}" for i, tok in enumerate(self.id_to_token)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        token_to_id: dict[str, int] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line:
                continue
            try:
                tok, raw_id = line.split("\t")
                token_to_id[tok] = int(raw_id)
            except ValueError as e:
                raise GenRetError(f"{path}:{lineno}: malformed vocabulary line") from e
        id_to_token = [""] * len(token_to_id)
        for tok, i in token_to_id.items():
            if not 0 <= i < len(id_to_token) or id_to_token[i]:
                raise GenRetError(f"vocabulary ids in {path} are not a dense bijection")
            id_to_token[i] = tok
        return cls(token_to_id, tuple(id_to_token))


def build_vocab(docs: Iterable, pairs: Iterable = (), min_freq: int = 1) -> Vocabulary:
    """Vocabulary over corpus tokens with frequency >= min_freq, plus specials and digits.

    Ids beyond the reserved specials are assigned in (frequency desc, token asc)
    order, so two builds over the same corpus are identical.
    """
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(doc.tokens)
    for pair in pairs:
        counts.update(tokenize(pair.query_text))
    for special in SPECIAL_TOKENS:
        counts.pop(special, None)
    kept = {t for t, c in counts.items() if c >= min_freq}
    kept.update(DIGIT_TOKENS)
    ordered = sorted(kept, key=lambda t: (-counts[t], t))
    id_to_token = tuple(SPECIAL_TOKENS) + tuple(ordered)
    return Vocabulary({t: i for i, t in enumerate(id_to_token)}, id_to_token)
