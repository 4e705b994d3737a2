"""Two-phase train/decode experiments and recall@k reporting."""

from __future__ import annotations

import json
import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import report as report_mod
from .augment import TfidfQueryGenerator, random_spans, synthetic_queries
from .cluster import cluster_ids
from .config import Config
from .corpus import (
    Document,
    QueryDocPair,
    deduplicate,
    duplicate_map,
    load_corpus,
    truncate,
)
from .decode import RankedResults, constrained_beam_search, joint_decode
from .docid import (
    Bm25Stats,
    IdAssignment,
    acid_id,
    bm25_top_k_id,
    build_bm25_stats,
    ensure_unique,
    first_k_tokens_id,
)
from .errors import EvalError, StageError
from .keyphrase import FixtureKeyphraseGenerator, RemoteKeyphraseClient, TfidfKeyphraseGenerator
from .scorer import RemoteScorer, Scorer, overlap_scorer, train_memorizing
from .tokenizer import Vocabulary, build_vocab
from .trie import IdTrie
from .wire import TcpTransport

logger = logging.getLogger(__name__)

RECALL_KS = (1, 10, 20)


@dataclass(frozen=True)
class RecallReport:
    """One evaluated (scheme, split) row plus the settings that produced it."""

    recalls: dict[int, float]
    scheme: str = ""
    split: str = ""
    beam_width: int = 0
    scorer: str = ""
    corpus_size: int = 0
    seed: int = 0
    num_queries: int = 0

    def recall(self, k: int) -> float:
        return self.recalls[k]


def recall_at_k(
    results: Mapping[str, RankedResults],
    gold: Mapping[str, str],
    ks: Sequence[int] = RECALL_KS,
    **metadata,
) -> RecallReport:
    """Percentage of gold queries whose document appears in the top-k results.

    Queries missing from `results` count as misses; an empty gold set is an error.
    """
    if not gold:
        raise EvalError("gold set is empty; nothing to evaluate")
    recalls: dict[int, float] = {}
    for k in ks:
        hits = 0
        for query_id, doc_key in gold.items():
            ranked = results.get(query_id)
            if ranked is not None and doc_key in ranked.doc_keys()[:k]:
                hits += 1
        recalls[k] = 100.0 * hits / len(gold)
    return RecallReport(recalls=recalls, num_queries=len(gold), **metadata)


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, str(e)) from e


@dataclass
class ExperimentArtifacts:
    """In-memory products of a run, exposed for composition and tests."""

    docs: list[Document] = field(default_factory=list)
    vocab: Vocabulary | None = None
    stats: Bm25Stats | None = None
    assignment: IdAssignment | None = None
    trie: IdTrie | None = None
    results: dict[str, RankedResults] = field(default_factory=dict)
    gold: dict[str, str] = field(default_factory=dict)
    report: RecallReport | None = None
    written: list[Path] = field(default_factory=list)


def build_assignment(
    docs: Sequence[Document],
    vocab: Vocabulary,
    stats: Bm25Stats,
    config: Config,
) -> IdAssignment:
    """Construct the configured ID scheme for every document and make it bijective."""
    scheme = config.id_scheme
    if scheme == "cluster":
        return cluster_ids(
            docs,
            stats,
            vocab,
            branching=config.branching,
            leaf_max=config.leaf_max,
            seed=config.seed,
            dim=config.embed_dim,
        )
    if scheme == "first_k":
        ids = [first_k_tokens_id(d, vocab, k=config.k) for d in docs]
    elif scheme == "bm25_top_k":
        ids = [bm25_top_k_id(d, stats, vocab, k=config.k) for d in docs]
    elif scheme == "acid":
        generator = _keyphrase_generator(stats, config)
        ids = [acid_id(d, generator, vocab) for d in docs]
    else:
        raise EvalError(f"unknown id_scheme {scheme!r}")
    return ensure_unique(ids, vocab)


def _keyphrase_generator(stats: Bm25Stats, config: Config):
    if config.keyphrase_source == "fixture":
        return FixtureKeyphraseGenerator(config.keyphrase_fixture)
    if config.keyphrase_source == "remote":
        # The API credential is read from the environment only, never from config files.
        credential = os.environ.get("GENRET_KEYPHRASE_CREDENTIAL")
        return RemoteKeyphraseClient(TcpTransport(config.remote_addr), credential=credential)
    return TfidfKeyphraseGenerator(stats)


def _split_pairs(
    pairs: Sequence[QueryDocPair], config: Config
) -> tuple[list[QueryDocPair], list[QueryDocPair]]:
    """(train, eval) pairs; a missing dev split is carved out of train at random."""
    rng = random.Random(config.seed)
    train = [p for p in pairs if p.split == "train"]
    if config.sample_pairs and len(train) > config.sample_pairs:
        train = rng.sample(train, config.sample_pairs)
    if config.eval_split == "train":
        return train, list(train)
    held = [p for p in pairs if p.split == config.eval_split]
    if not held and config.eval_split == "dev" and config.dev_fraction > 0 and train:
        n_dev = max(1, int(len(train) * config.dev_fraction))
        held = rng.sample(train, n_dev)
        held_ids = {id(p) for p in held}
        train = [p for p in train if id(p) not in held_ids]
    return train, held


def _training_sequences(
    indexing_texts: Sequence[tuple[str, str]],
    train_pairs: Sequence[QueryDocPair],
    assignment: IdAssignment,
    vocab: Vocabulary,
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    encoded: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for text, doc_key in indexing_texts:
        encoded.append((tuple(vocab.encode(text)), assignment.forward[doc_key].id_tokens))
    for p in train_pairs:
        encoded.append((tuple(vocab.encode(p.query_text)), assignment.forward[p.doc_key].id_tokens))
    return encoded


def _pick_exemplars(
    train_pairs: Sequence[QueryDocPair],
    assignment: IdAssignment,
    count: int,
    seed: int,
) -> list[tuple[str, str]]:
    rng = random.Random(seed)
    chosen = train_pairs if len(train_pairs) <= count else rng.sample(train_pairs, count)
    return [(p.query_text, assignment.forward[p.doc_key].id_text) for p in chosen]


def run_experiment(config: Config, keep_artifacts: bool = False) -> RecallReport | ExperimentArtifacts:
    """Load -> IDs -> trie -> train -> decode -> recall report, deterministically per (config, seed).

    Writes the report (TSV and Markdown), per-query rankings, and optionally a
    figure under config.output_dir; on failure, files written so far are removed.
    """
    config.validate()
    art = ExperimentArtifacts()

    with _stage("load"):
        docs, pairs = load_corpus(config.documents_path, config.pairs_path)

    with _stage("dedup"):
        if config.dedup:
            remap = duplicate_map(docs, config.dedup_prefix_len, config.dedup_threshold)
            docs = deduplicate(docs, config.dedup_prefix_len, config.dedup_threshold)
            if remap:
                pairs = [
                    QueryDocPair(p.query_id, p.query_text, remap.get(p.doc_key, p.doc_key), p.split)
                    for p in pairs
                ]

    with _stage("truncate"):
        docs = [truncate(d, config.max_doc_tokens) for d in docs]
        art.docs = docs

    with _stage("split"):
        train_pairs, eval_pairs = _split_pairs(pairs, config)
        if not eval_pairs:
            raise EvalError(f"no pairs in eval split {config.eval_split!r}")

    with _stage("vocab"):
        vocab = build_vocab(docs, pairs)
        art.vocab = vocab

    with _stage("ids"):
        stats = build_bm25_stats(docs)
        assignment = build_assignment(docs, vocab, stats, config)
        art.stats, art.assignment = stats, assignment

    with _stage("trie"):
        trie = IdTrie.build(assignment)
        art.trie = trie

    with _stage("augment"):
        generator = TfidfQueryGenerator(stats)
        indexing_texts: list[tuple[str, str]] = []
        for i, doc in enumerate(docs):
            for pair in synthetic_queries(doc, config.queries_per_doc, generator):
                indexing_texts.append((pair.input_text, pair.doc_key))
            if config.include_spans:
                for pair in random_spans(doc, config.spans_per_doc, config.span_len, config.seed + i):
                    indexing_texts.append((pair.input_text, pair.doc_key))

    with _stage("train"):
        sequences = _training_sequences(indexing_texts, train_pairs, assignment, vocab)
        exemplars = _pick_exemplars(train_pairs, assignment, config.exemplar_count, config.seed)
        decode_fn = _make_decoder(config, vocab, trie, sequences, exemplars)

    with _stage("decode"):
        gold: dict[str, str] = {}
        queries: dict[str, str] = {}
        for p in eval_pairs:
            if p.query_id in gold:
                logger.warning("duplicate query_id %r in eval split; keeping the first", p.query_id)
                continue
            gold[p.query_id] = p.doc_key
            queries[p.query_id] = p.query_text
        results: dict[str, RankedResults] = {}
        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                futures = {
                    qid: pool.submit(decode_fn, tuple(vocab.encode(text)))
                    for qid, text in queries.items()
                }
                results = {qid: fut.result() for qid, fut in futures.items()}
        else:
            for qid, text in queries.items():
                results[qid] = decode_fn(tuple(vocab.encode(text)))
        art.results, art.gold = results, gold

    with _stage("evaluate"):
        rep = recall_at_k(
            results,
            gold,
            ks=RECALL_KS,
            scheme=config.id_scheme,
            split=config.eval_split,
            beam_width=config.beam_width,
            scorer=config.scorer,
            corpus_size=len(docs),
            seed=config.seed,
        )
        art.report = rep

    with _stage("write"):
        art.written = write_outputs(rep, results, config)

    return art if keep_artifacts else rep


def _make_decoder(
    config: Config,
    vocab: Vocabulary,
    trie: IdTrie,
    sequences: list[tuple[tuple[int, ...], tuple[int, ...]]],
    exemplars: list[tuple[str, str]],
):
    max_len = config.max_len if config.max_len > 0 else None

    def in_process(kind: str) -> Scorer:
        if kind == "memorizing":
            return train_memorizing(sequences)
        return overlap_scorer(sequences)

    if config.scorer in ("memorizing", "overlap"):
        scorer = in_process(config.scorer)
        return lambda q: constrained_beam_search(q, scorer, trie, config.beam_width, max_len)
    if config.scorer == "remote":
        remote = RemoteScorer(TcpTransport(config.remote_addr, max_connections=config.workers), vocab)
        return lambda q: constrained_beam_search(
            q, remote, trie, config.beam_width, max_len, exemplars=exemplars
        )
    small = in_process(config.small_scorer)
    large = RemoteScorer(TcpTransport(config.remote_addr, max_connections=config.workers), vocab)
    return lambda q: joint_decode(
        q, small, large, trie, alpha=config.alpha, exemplars=exemplars,
        width=config.beam_width, max_len=max_len,
    )


def write_outputs(
    rep: RecallReport, results: Mapping[str, RankedResults], config: Config
) -> list[Path]:
    """Persist the report (TSV + Markdown), per-query rankings, and an optional figure."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        tsv = out / "report.tsv"
        tsv.write_text(report_mod.report_tsv([rep]), encoding="utf-8")
        written.append(tsv)

        md = out / "report.md"
        md.write_text(report_mod.report_markdown([rep]), encoding="utf-8")
        written.append(md)

        rankings = out / "rankings.ndjson"
        with open(rankings, "w", encoding="utf-8") as f:
            for query_id in sorted(results):
                entries = [[k, s] for k, s in results[query_id].entries]
                f.write(json.dumps({"query_id": query_id, "ranked": entries}) + "\n")
        written.append(rankings)

        if config.figures:
            fig = out / "report.png"
            report_mod.save_recall_figure([rep], fig)
            written.append(fig)
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written
