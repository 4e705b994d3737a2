"""Command-line front end for the full pipeline and the sweep experiments."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import report as report_mod
from .augment import random_spans, synthetic_queries, TfidfQueryGenerator
from .config import Config, make_config
from .corpus import (
    QueryDocPair,
    compute_stats,
    deduplicate,
    load_corpus,
    load_documents,
    load_pairs,
    save_documents,
    save_pairs,
    truncate,
)
from .decode import constrained_beam_search, joint_decode
from .docid import IdAssignment, DocId, build_bm25_stats
from .errors import GenRetError
from .evaluate import (
    RecallReport,
    _pick_exemplars,
    _training_sequences,
    build_assignment,
    run_experiment,
)
from .scorer import MemorizingScorer, OverlapScorer, RemoteScorer, train_memorizing, overlap_scorer
from .tokenizer import EOS, Vocabulary, build_vocab
from .trie import IdTrie
from .wire import TcpTransport

BEAM_SWEEP_WIDTHS = (1, 2, 4, 8, 16, 20, 30, 40, 50)
IDLEN_SWEEP_KS = (10, 20, 30, 40)

CREDENTIAL_ENV = "GENRET_KEYPHRASE_CREDENTIAL"


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--documents", dest="documents_path", help="documents JSONL path")
    parser.add_argument("--pairs", dest="pairs_path", help="query-document pairs TSV path")
    parser.add_argument("--out", dest="output_dir", help="output directory")
    parser.add_argument("--id-scheme", dest="id_scheme", choices=("first_k", "bm25_top_k", "cluster", "acid"))
    parser.add_argument("--k", type=int, help="ID length for first_k / bm25_top_k")
    parser.add_argument("--branching", type=int)
    parser.add_argument("--leaf-max", dest="leaf_max", type=int)
    parser.add_argument("--scorer", choices=("memorizing", "overlap", "remote", "joint"))
    parser.add_argument("--small-scorer", dest="small_scorer", choices=("memorizing", "overlap"))
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--beam-width", dest="beam_width", type=int)
    parser.add_argument("--max-len", dest="max_len", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--remote-addr", dest="remote_addr", help="host:port of a wire-protocol server")
    parser.add_argument("--eval-split", dest="eval_split", choices=("train", "dev", "test"))
    parser.add_argument("--sample-pairs", dest="sample_pairs", type=int)
    parser.add_argument("--queries-per-doc", dest="queries_per_doc", type=int)
    parser.add_argument("--include-spans", dest="include_spans", action="store_const", const=True)
    parser.add_argument("--no-dedup", dest="dedup", action="store_const", const=False)
    parser.add_argument("--no-figures", dest="figures", action="store_const", const=False)
    parser.add_argument("--keyphrase-source", dest="keyphrase_source", choices=("tfidf", "fixture", "remote"))
    parser.add_argument("--keyphrase-fixture", dest="keyphrase_fixture")


def _config_from_args(args: argparse.Namespace) -> Config:
    flag_names = [
        "documents_path", "pairs_path", "output_dir", "id_scheme", "k", "branching",
        "leaf_max", "scorer", "small_scorer", "alpha", "beam_width", "max_len", "seed",
        "workers", "remote_addr", "eval_split", "sample_pairs", "queries_per_doc",
        "include_spans", "dedup", "figures", "keyphrase_source", "keyphrase_fixture",
    ]
    overrides = {name: getattr(args, name, None) for name in flag_names}
    return make_config(args.config, **overrides)


def _out_dir(cfg: Config) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_stats(cfg: Config) -> str:
    docs, pairs = load_corpus(cfg.documents_path, cfg.pairs_path)
    rows = []
    for split in ("train", "dev", "test", "index"):
        split_pairs = [p for p in pairs if p.split == split]
        if split_pairs:
            rows.append((split, compute_stats(docs, split_pairs)))
    rows.append(("all", compute_stats(docs, pairs)))
    out = _out_dir(cfg) / "stats.tsv"
    out.write_text(report_mod.stats_tsv(rows), encoding="utf-8")
    return f"stats: {len(docs)} docs, {len(pairs)} pairs -> {out}"


def cmd_dedup(cfg: Config) -> str:
    docs = load_documents(cfg.documents_path)
    kept = deduplicate(docs, cfg.dedup_prefix_len, cfg.dedup_threshold)
    out = _out_dir(cfg) / "documents.dedup.jsonl"
    save_documents(kept, out)
    return f"dedup: kept {len(kept)} / {len(docs)} documents -> {out}"


def _prepare(cfg: Config):
    docs, pairs = load_corpus(cfg.documents_path, cfg.pairs_path)
    if cfg.dedup:
        docs = deduplicate(docs, cfg.dedup_prefix_len, cfg.dedup_threshold)
    docs = [truncate(d, cfg.max_doc_tokens) for d in docs]
    vocab = build_vocab(docs, pairs)
    stats = build_bm25_stats(docs)
    return docs, pairs, vocab, stats


def cmd_build_ids(cfg: Config) -> str:
    docs, pairs, vocab, stats = _prepare(cfg)
    assignment = build_assignment(docs, vocab, stats, cfg)
    out = _out_dir(cfg)
    vocab.save(out / "vocab.tsv")
    ids_path = out / "ids.jsonl"
    with open(ids_path, "w", encoding="utf-8") as f:
        for doc_id in assignment.doc_ids():
            rec = {"doc_key": doc_id.doc_key, "method": doc_id.method, "id_text": doc_id.id_text}
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return f"build-ids: {len(assignment)} {cfg.id_scheme} IDs -> {ids_path}"


def _load_assignment(cfg: Config, vocab: Vocabulary) -> IdAssignment:
    ids_path = Path(cfg.output_dir) / "ids.jsonl"
    doc_ids = []
    with open(ids_path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            tokens = tuple(vocab.encode(rec["id_text"])) + (EOS,)
            doc_ids.append(DocId(rec["doc_key"], rec["method"], rec["id_text"], tokens))
    return IdAssignment.from_doc_ids(doc_ids)


def cmd_build_trie(cfg: Config) -> str:
    out = _out_dir(cfg)
    vocab = Vocabulary.load(out / "vocab.tsv")
    assignment = _load_assignment(cfg, vocab)
    trie = IdTrie.build(assignment)
    trie_path = out / "trie.json"
    trie.save(trie_path)
    return f"build-trie: {len(trie)} IDs, max depth {trie.max_depth()} -> {trie_path}"


def cmd_augment(cfg: Config) -> str:
    docs, pairs, vocab, stats = _prepare(cfg)
    generator = TfidfQueryGenerator(stats)
    out_pairs: list[QueryDocPair] = []
    for i, doc in enumerate(docs):
        for j, pair in enumerate(synthetic_queries(doc, cfg.queries_per_doc, generator)):
            out_pairs.append(QueryDocPair(f"syn-{doc.doc_key}-{j}", pair.input_text, doc.doc_key, "index"))
        if cfg.include_spans:
            for j, pair in enumerate(random_spans(doc, cfg.spans_per_doc, cfg.span_len, cfg.seed + i)):
                out_pairs.append(QueryDocPair(f"span-{doc.doc_key}-{j}", pair.input_text, doc.doc_key, "index"))
    out = _out_dir(cfg) / "index_pairs.tsv"
    save_pairs(out_pairs, out)
    return f"augment: {len(out_pairs)} indexing pairs -> {out}"


def cmd_train(cfg: Config) -> str:
    out = _out_dir(cfg)
    vocab = Vocabulary.load(out / "vocab.tsv")
    assignment = _load_assignment(cfg, vocab)
    pairs = load_pairs(cfg.pairs_path)
    index_path = out / "index_pairs.tsv"
    indexing = load_pairs(index_path) if index_path.exists() else []
    train_pairs = [p for p in pairs if p.split == "train"]
    texts = [(p.query_text, p.doc_key) for p in indexing]
    sequences = _training_sequences(texts, train_pairs, assignment, vocab)
    exemplars = _pick_exemplars(train_pairs, assignment, cfg.exemplar_count, cfg.seed)

    artifact: dict = {"kind": cfg.scorer, "exemplars": exemplars}
    if cfg.scorer == "memorizing":
        scorer = train_memorizing(sequences)
        artifact["pairs"] = [[list(q), list(i)] for q, i in scorer.table.items()]
    elif cfg.scorer == "overlap":
        scorer = overlap_scorer(sequences)
        artifact["train_ids"] = [list(s) for s in scorer.train_ids]
        artifact["w_q"], artifact["w_c"] = scorer.w_q, scorer.w_c
    elif cfg.scorer == "remote":
        artifact["remote_addr"] = cfg.remote_addr
    else:  # joint
        artifact["remote_addr"] = cfg.remote_addr
        artifact["alpha"] = cfg.alpha
        artifact["small"] = cfg.small_scorer
        if cfg.small_scorer == "memorizing":
            artifact["pairs"] = [[list(q), list(i)] for q, i in train_memorizing(sequences).table.items()]
        else:
            small = overlap_scorer(sequences)
            artifact["train_ids"] = [list(s) for s in small.train_ids]
            artifact["w_q"], artifact["w_c"] = small.w_q, small.w_c
    scorer_path = out / "scorer.json"
    scorer_path.write_text(json.dumps(artifact), encoding="utf-8")
    return f"train: {cfg.scorer} scorer over {len(sequences)} pairs -> {scorer_path}"


def _scorer_from_artifact(artifact: dict, vocab: Vocabulary, cfg: Config):
    kind = artifact["kind"]
    exemplars = [tuple(e) for e in artifact.get("exemplars", [])]

    def in_process(which: str):
        if which == "memorizing":
            table = {tuple(q): tuple(i) for q, i in artifact["pairs"]}
            return MemorizingScorer(table)
        return OverlapScorer(
            [tuple(s) for s in artifact["train_ids"]],
            w_q=artifact.get("w_q", 4.0), w_c=artifact.get("w_c", 1.0),
        )

    if kind in ("memorizing", "overlap"):
        return kind, in_process(kind), None, exemplars
    addr = cfg.remote_addr or artifact.get("remote_addr", "")
    if not addr:
        raise GenRetError(f"scorer kind {kind!r} requires --remote-addr")
    remote = RemoteScorer(TcpTransport(addr), vocab)
    if kind == "remote":
        return kind, remote, None, exemplars
    small = in_process(artifact.get("small", "memorizing"))
    return kind, small, remote, exemplars


def cmd_retrieve(cfg: Config, query: str, top: int | None) -> str:
    out = Path(cfg.output_dir)
    vocab = Vocabulary.load(out / "vocab.tsv")
    assignment = _load_assignment(cfg, vocab)
    trie = IdTrie.load(out / "trie.json")
    artifact = json.loads((out / "scorer.json").read_text(encoding="utf-8"))
    kind, scorer, remote, exemplars = _scorer_from_artifact(artifact, vocab, cfg)
    width = top or cfg.beam_width
    max_len = cfg.max_len if cfg.max_len > 0 else None
    query_tokens = tuple(vocab.encode(query))
    if remote is None:
        ranked = constrained_beam_search(
            query_tokens, scorer, trie, width, max_len,
            exemplars=exemplars if kind == "remote" else (),
        )
    else:
        ranked = joint_decode(
            query_tokens, scorer, remote, trie, alpha=artifact.get("alpha", cfg.alpha),
            exemplars=exemplars, width=width, max_len=max_len,
        )
    lines = []
    for doc_key, score in ranked.entries:
        id_text = assignment.forward[doc_key].id_text
        lines.append(f"{doc_key}\t{id_text}\t{score:.6f}")
    (out / "retrieval.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))
    return f"retrieve: {len(ranked.entries)} results for {query!r}"


def cmd_evaluate(cfg: Config) -> str:
    rep = run_experiment(cfg)
    assert isinstance(rep, RecallReport)
    recalls = " ".join(f"r@{k}={rep.recalls[k]:.1f}" for k in sorted(rep.recalls))
    return f"evaluate: {cfg.id_scheme}/{cfg.scorer} on {rep.num_queries} queries: {recalls}"


def _run_sweep(cfg: Config, name: str, xs, mutate) -> str:
    rows: list[tuple[int, RecallReport]] = []
    base_out = Path(cfg.output_dir)
    for x in xs:
        sub = Config(**{**cfg.__dict__, "output_dir": str(base_out / f"{name}_{x}")})
        mutate(sub, x)
        rep = sub_run(sub)
        rows.append((x, rep))
    tsv_path = base_out / f"{name}.tsv"
    tsv_path.write_text(report_mod.sweep_tsv(name, rows), encoding="utf-8")
    extras = f" and {name}.png" if cfg.figures else ""
    if cfg.figures:
        report_mod.save_sweep_figure(name, rows, base_out / f"{name}.png")
    return f"{name}: {len(rows)} rows -> {tsv_path}{extras}"


def sub_run(cfg: Config) -> RecallReport:
    rep = run_experiment(cfg)
    assert isinstance(rep, RecallReport)
    return rep


def cmd_sweep_beam(cfg: Config) -> str:
    def mutate(sub: Config, width: int) -> None:
        sub.beam_width = width

    return _run_sweep(cfg, "beam_width", BEAM_SWEEP_WIDTHS, mutate)


def cmd_sweep_idlen(cfg: Config) -> str:
    def mutate(sub: Config, k: int) -> None:
        sub.id_scheme = "first_k"
        sub.k = k

    return _run_sweep(cfg, "id_length", IDLEN_SWEEP_KS, mutate)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genret", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (
        "stats", "dedup", "build-ids", "build-trie", "augment", "train",
        "retrieve", "evaluate", "sweep-beam", "sweep-idlen",
    ):
        p = sub.add_parser(name)
        _add_config_flags(p)
        if name == "retrieve":
            p.add_argument("--query", required=True)
            p.add_argument("--top", type=int, help="number of results (defaults to beam width)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        handlers = {
            "stats": lambda: cmd_stats(cfg),
            "dedup": lambda: cmd_dedup(cfg),
            "build-ids": lambda: cmd_build_ids(cfg),
            "build-trie": lambda: cmd_build_trie(cfg),
            "augment": lambda: cmd_augment(cfg),
            "train": lambda: cmd_train(cfg),
            "retrieve": lambda: cmd_retrieve(cfg, args.query, args.top),
            "evaluate": lambda: cmd_evaluate(cfg),
            "sweep-beam": lambda: cmd_sweep_beam(cfg),
            "sweep-idlen": lambda: cmd_sweep_idlen(cfg),
        }
        summary = handlers[args.command]()
    except (GenRetError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
