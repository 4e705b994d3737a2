"""Trie-constrained beam search, two-scorer joint decoding, and an exhaustive oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import DecodeError
from .scorer import Scorer, ScoreRequest
from .tokenizer import EOS
from .trie import IdTrie

DEFAULT_BEAM_WIDTH = 20
DEFAULT_JOINT_ALPHA = 0.85
EXHAUSTIVE_GUARD = 10_000

StepFn = Callable[[tuple[int, ...], tuple[int, ...]], dict[int, float]]


@dataclass(frozen=True)
class Hypothesis:
    """A partial or complete ID with its accumulated log probability."""

    prefix: tuple[int, ...]
    score: float
    complete: bool = False


@dataclass(frozen=True)
class RankedResults:
    """Decoded documents ordered by descending score."""

    entries: tuple[tuple[str, float], ...]

    def doc_keys(self) -> list[str]:
        return [k for k, _ in self.entries]


def _beam(trie: IdTrie, width: int, max_len: int, step_fn: StepFn) -> list[Hypothesis]:
    active = [Hypothesis((), 0.0)]
    completed: list[Hypothesis] = []
    while active:
        if len(completed) >= width:
            kth = sorted((h.score for h in completed), reverse=True)[width - 1]
            if max(h.score for h in active) < kth:
                break
        candidates: list[Hypothesis] = []
        for hyp in active:
            allowed = trie.allowed_next(hyp.prefix)
            logprobs = step_fn(hyp.prefix, allowed)
            for token in allowed:
                prefix = hyp.prefix + (token,)
                score = hyp.score + logprobs[token]
                if token == EOS:
                    completed.append(Hypothesis(prefix, score, complete=True))
                elif len(prefix) < max_len:
                    candidates.append(Hypothesis(prefix, score))
        candidates.sort(key=lambda h: (-h.score, h.prefix))
        active = candidates[:width]
    return completed


def _ranked(completed: list[Hypothesis], limit: int, trie: IdTrie) -> RankedResults:
    completed = sorted(completed, key=lambda h: (-h.score, h.prefix))[:limit]
    return RankedResults(tuple((trie.lookup(h.prefix), h.score) for h in completed))


def _single_scorer_step(
    query_tokens: tuple[int, ...], scorer: Scorer, exemplars: tuple[tuple[str, str], ...]
) -> StepFn:
    def step(prefix: tuple[int, ...], allowed: tuple[int, ...]) -> dict[int, float]:
        resp = scorer.next_logprobs(ScoreRequest(query_tokens, exemplars, prefix, allowed))
        return resp.logprobs

    return step


def constrained_beam_search(
    query_tokens: Sequence[int],
    scorer: Scorer,
    trie: IdTrie,
    width: int = DEFAULT_BEAM_WIDTH,
    max_len: int | None = None,
    exemplars: Sequence[tuple[str, str]] = (),
) -> RankedResults:
    """Beam search where each step may only extend along trie edges.

    Completed hypotheses accumulate in a pool; the search stops once the best
    active score falls below the width-th completed score. Ties break by
    lexicographic token-id order, making rankings reproducible.
    """
    query_tokens, exemplars = tuple(query_tokens), tuple(exemplars)
    width, max_len = _check_args(trie, width, max_len)
    completed = _beam(trie, width, max_len, _single_scorer_step(query_tokens, scorer, exemplars))
    return _ranked(completed, width, trie)


def joint_decode(
    query_tokens: Sequence[int],
    small: Scorer,
    large: Scorer,
    trie: IdTrie,
    alpha: float = DEFAULT_JOINT_ALPHA,
    exemplars: Sequence[tuple[str, str]] = (),
    width: int = DEFAULT_BEAM_WIDTH,
    max_len: int | None = None,
) -> RankedResults:
    """Beam search over the per-step probability mixture alpha*p_small + (1-alpha)*p_large.

    Both distributions are already normalized over the allowed set, so the
    mixture needs no renormalization. Exemplars reach only the large scorer.
    At alpha 1 or 0 the untouched single-scorer log probabilities are used, so
    the degenerate mixtures reproduce single-scorer results exactly.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DecodeError(f"alpha must be within [0, 1], got {alpha}")
    query_tokens, exemplars = tuple(query_tokens), tuple(exemplars)
    width, max_len = _check_args(trie, width, max_len)

    def step(prefix: tuple[int, ...], allowed: tuple[int, ...]) -> dict[int, float]:
        resp_small = small.next_logprobs(ScoreRequest(query_tokens, (), prefix, allowed))
        resp_large = large.next_logprobs(ScoreRequest(query_tokens, exemplars, prefix, allowed))
        if alpha == 1.0:
            return resp_small.logprobs
        if alpha == 0.0:
            return resp_large.logprobs
        return {
            t: math.log(
                alpha * math.exp(resp_small.logprobs[t])
                + (1.0 - alpha) * math.exp(resp_large.logprobs[t])
            )
            for t in allowed
        }

    return _ranked(_beam(trie, width, max_len, step), width, trie)


def exhaustive_rank(
    query_tokens: Sequence[int],
    scorer: Scorer,
    trie: IdTrie,
    exemplars: Sequence[tuple[str, str]] = (),
    guard: int = EXHAUSTIVE_GUARD,
) -> RankedResults:
    """Score every complete ID in the trie by walking its path; the beam search oracle."""
    if len(trie) == 0:
        raise DecodeError("cannot decode against an empty trie")
    if len(trie) > guard:
        raise DecodeError(f"trie holds {len(trie)} IDs, above the exhaustive guard of {guard}")
    query_tokens, exemplars = tuple(query_tokens), tuple(exemplars)
    step = _single_scorer_step(query_tokens, scorer, exemplars)
    scored: list[Hypothesis] = []
    for id_tokens, _ in trie.iter_ids():
        score = 0.0
        for i, token in enumerate(id_tokens):
            prefix = id_tokens[:i]
            score += step(prefix, trie.allowed_next(prefix))[token]
        scored.append(Hypothesis(id_tokens, score, complete=True))
    return _ranked(scored, len(scored), trie)


def _check_args(trie: IdTrie, width: int, max_len: int | None) -> tuple[int, int]:
    if len(trie) == 0:
        raise DecodeError("cannot decode against an empty trie")
    if width < 1:
        raise DecodeError(f"beam width must be >= 1, got {width}")
    if max_len is None or max_len <= 0:
        max_len = trie.max_depth()
    # A max_len below the longest ID is tolerated: hypotheses that cannot
    # finish within it are dropped and the completed pool may come up short.
    return width, max_len
