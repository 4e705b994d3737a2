"""Next-token scoring: the per-step distribution interface and its deterministic implementations."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

from .errors import ProtocolError, ScorerTransportError
from .tokenizer import EOS, Vocabulary
from .wire import Transport

logger = logging.getLogger(__name__)

MEMORIZING_EPSILON = 1e-4
OVERLAP_QUERY_WEIGHT = 4.0
OVERLAP_CONTINUATION_WEIGHT = 1.0
NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True)
class ScoreRequest:
    """Everything a scorer may condition on for one decoding step."""

    query_tokens: tuple[int, ...]
    exemplars: tuple[tuple[str, str], ...]
    prefix: tuple[int, ...]
    allowed: tuple[int, ...]

    def __post_init__(self):
        if not self.allowed:
            raise ValueError("allowed token set must be non-empty")


@dataclass(frozen=True)
class ScoreResponse:
    """Normalized log probabilities keyed exactly by the request's allowed set."""

    logprobs: dict[int, float]


class Scorer(Protocol):
    def next_logprobs(self, req: ScoreRequest) -> ScoreResponse: ...


def logits_to_response(allowed: Sequence[int], logits: Sequence[float]) -> ScoreResponse:
    """Softmax `logits` over `allowed` and return them as log probabilities."""
    m = max(logits)
    lse = m + math.log(sum(math.exp(x - m) for x in logits))
    return ScoreResponse({t: x - lse for t, x in zip(allowed, logits)})


def check_response(resp: ScoreResponse, allowed: Iterable[int], tol: float = NORMALIZATION_TOL) -> None:
    """Raise ProtocolError unless the response honors the scoring contract."""
    allowed = set(allowed)
    if set(resp.logprobs) != allowed:
        raise ProtocolError("response keys differ from the allowed set")
    total = sum(math.exp(lp) for lp in resp.logprobs.values())
    if abs(total - 1.0) > tol:
        raise ProtocolError(f"response probabilities sum to {total}, not 1")


class UniformScorer:
    """ln(1/|allowed|) for every allowed token."""

    def next_logprobs(self, req: ScoreRequest) -> ScoreResponse:
        lp = -math.log(len(req.allowed))
        return ScoreResponse({t: lp for t in req.allowed})


class MemorizingScorer:
    """Replays trained (query -> ID) pairs almost deterministically.

    On an exact query match the recorded next ID token gets mass 1 - epsilon
    and the remainder spreads uniformly over the other allowed tokens; any
    other query scores uniformly.
    """

    def __init__(self, table: dict[tuple[int, ...], tuple[int, ...]], epsilon: float = MEMORIZING_EPSILON):
        self._table = table
        self._epsilon = epsilon

    @property
    def table(self) -> dict[tuple[int, ...], tuple[int, ...]]:
        return self._table

    def next_logprobs(self, req: ScoreRequest) -> ScoreResponse:
        target = None
        recorded = self._table.get(req.query_tokens)
        if recorded is not None:
            pos = len(req.prefix)
            if pos < len(recorded) and recorded[:pos] == req.prefix and recorded[pos] in req.allowed:
                target = recorded[pos]
        m = len(req.allowed)
        if target is None:
            lp = -math.log(m)
            return ScoreResponse({t: lp for t in req.allowed})
        if m == 1:
            return ScoreResponse({target: 0.0})
        hit = math.log(1.0 - self._epsilon)
        miss = math.log(self._epsilon / (m - 1))
        return ScoreResponse({t: hit if t == target else miss for t in req.allowed})


def train_memorizing(
    pairs: Iterable[tuple[Sequence[int], Sequence[int]]], epsilon: float = MEMORIZING_EPSILON
) -> MemorizingScorer:
    """Build a MemorizingScorer; on conflicting pairs the first mapping wins."""
    table: dict[tuple[int, ...], tuple[int, ...]] = {}
    for query, id_tokens in pairs:
        query, id_tokens = tuple(query), tuple(id_tokens)
        if not id_tokens or id_tokens[-1] != EOS:
            raise ValueError("training IDs must be EOS-terminated")
        existing = table.get(query)
        if existing is not None:
            if existing != id_tokens:
                logger.warning("conflicting training pair for query %r; keeping the first ID", query)
            continue
        table[query] = id_tokens
    return MemorizingScorer(table, epsilon)


class OverlapScorer:
    """Lexical-overlap scorer: rewards tokens present in the query plus a continuation prior.

    logit(t) = w_q * [t in query] + w_c * ln(1 + C(prefix -> t)), where C counts
    how many training ID sequences continue the current prefix with t.
    """

    def __init__(
        self,
        train_ids: Iterable[Sequence[int]],
        w_q: float = OVERLAP_QUERY_WEIGHT,
        w_c: float = OVERLAP_CONTINUATION_WEIGHT,
    ):
        self.w_q = w_q
        self.w_c = w_c
        # Every training sequence counts, so repeated IDs act as a popularity prior.
        self._counts: dict[tuple[int, ...], dict[int, int]] = {}
        self._train_ids: list[tuple[int, ...]] = []
        for seq in train_ids:
            seq = tuple(seq)
            self._train_ids.append(seq)
            for i in range(len(seq)):
                nxt = self._counts.setdefault(seq[:i], {})
                nxt[seq[i]] = nxt.get(seq[i], 0) + 1
        self._query_sets: dict[tuple[int, ...], frozenset[int]] = {}

    @property
    def train_ids(self) -> list[tuple[int, ...]]:
        return list(self._train_ids)

    def next_logprobs(self, req: ScoreRequest) -> ScoreResponse:
        qset = self._query_sets.get(req.query_tokens)
        if qset is None:
            qset = frozenset(req.query_tokens)
            if len(self._query_sets) < 4096:
                self._query_sets[req.query_tokens] = qset
        counts = self._counts.get(req.prefix, {})
        logits = [
            (self.w_q if t in qset else 0.0) + self.w_c * math.log1p(counts.get(t, 0))
            for t in req.allowed
        ]
        return logits_to_response(req.allowed, logits)


def overlap_scorer(
    train_pairs: Iterable[tuple[Sequence[int], Sequence[int]]],
    w_q: float = OVERLAP_QUERY_WEIGHT,
    w_c: float = OVERLAP_CONTINUATION_WEIGHT,
) -> OverlapScorer:
    """OverlapScorer whose continuation counts come from the training pairs' ID sequences."""
    return OverlapScorer((id_tokens for _, id_tokens in train_pairs), w_q=w_q, w_c=w_c)


class RemoteScorer:
    """Client side of the scorer wire protocol; transport failures surface as errors."""

    def __init__(self, transport: Transport, vocab: Vocabulary, credential: str | None = None):
        self._transport = transport
        self._vocab = vocab
        self._credential = credential

    def next_logprobs(self, req: ScoreRequest) -> ScoreResponse:
        message = {
            "type": "logprobs",
            "query": self._vocab.decode(req.query_tokens),
            "exemplars": [list(e) for e in req.exemplars],
            "prefix_tokens": list(req.prefix),
            "allowed_tokens": list(req.allowed),
        }
        if self._credential:
            message["credential"] = self._credential
        response = self._transport.request(message)
        if "error" in response:
            raise ScorerTransportError(f"remote scorer error: {response['error']}")
        raw = response.get("logprobs")
        if not isinstance(raw, dict):
            raise ProtocolError("logprobs response missing 'logprobs' object")
        try:
            logprobs = {int(k): float(v) for k, v in raw.items()}
        except (TypeError, ValueError) as e:
            raise ProtocolError(f"malformed logprobs keys or values: {e}") from e
        resp = ScoreResponse(logprobs)
        check_response(resp, req.allowed)
        return resp

    def close(self) -> None:
        self._transport.close()
