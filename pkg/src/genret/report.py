"""Delimited report rendering and the matplotlib figures written alongside it."""

from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .corpus import CorpusStats

if TYPE_CHECKING:
    from .evaluate import RecallReport

RECALL_COLUMNS = (1, 10, 20)


def scheme_label(scheme: str, k: int | None = None) -> str:
    if scheme == "acid":
        return "ACID"
    if scheme == "first_k":
        return f"First {k} Tokens" if k else "First-K Tokens"
    if scheme == "bm25_top_k":
        return f"BM25 Top-{k}" if k else "BM25 Top-K"
    if scheme == "cluster":
        return "Cluster Integer IDs"
    return scheme


def render_stats_row(label: str, stats: CorpusStats) -> str:
    return f"{label}\t{stats.num_pairs}\t{stats.avg_query_len:.1f}\t{stats.avg_doc_len:.1f}"


def stats_tsv(rows: Sequence[tuple[str, CorpusStats]]) -> str:
    lines = ["corpus\tnum_pairs\tavg_query_len\tavg_doc_len"]
    lines += [render_stats_row(label, s) for label, s in rows]
    return "\n".join(lines) + "\n"


def render_report_row(report: "RecallReport") -> str:
    """Compact row in the style "ACID 52.9 79.5 84.0"."""
    label = scheme_label(report.scheme)
    recalls = " ".join(f"{report.recalls[k]:.1f}" for k in RECALL_COLUMNS)
    return f"{label} {recalls}"


def report_tsv(reports: Sequence["RecallReport"]) -> str:
    lines = ["scheme\tsplit\tscorer\tbeam_width\tcorpus_size\tseed\tnum_queries\tr@1\tr@10\tr@20"]
    for r in reports:
        cells = [
            r.scheme, r.split, r.scorer, str(r.beam_width), str(r.corpus_size),
            str(r.seed), str(r.num_queries),
        ] + [f"{r.recalls[k]:.1f}" for k in RECALL_COLUMNS]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def report_markdown(reports: Sequence["RecallReport"]) -> str:
    lines = [
        "| Scheme | Rec@1 | @10 | @20 |",
        "| --- | --- | --- | --- |",
    ]
    for r in reports:
        recalls = " | ".join(f"{r.recalls[k]:.1f}" for k in RECALL_COLUMNS)
        lines.append(f"| {scheme_label(r.scheme)} | {recalls} |")
    return "\n".join(lines) + "\n"


def sweep_tsv(x_name: str, rows: Sequence[tuple[int, "RecallReport"]]) -> str:
    lines = [f"{x_name}\tr@1\tr@10\tr@20"]
    for x, r in rows:
        lines.append("\t".join([str(x)] + [f"{r.recalls[k]:.1f}" for k in RECALL_COLUMNS]))
    return "\n".join(lines) + "\n"


def save_recall_figure(reports: Sequence["RecallReport"], path: str | Path) -> None:
    """Grouped recall@k bars, one group per report row."""
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / len(RECALL_COLUMNS)
    for i, k in enumerate(RECALL_COLUMNS):
        xs = [j + i * width for j in range(len(reports))]
        ax.bar(xs, [r.recalls[k] for r in reports], width=width, label=f"recall@{k}")
    ax.set_xticks([j + width for j in range(len(reports))])
    ax.set_xticklabels([scheme_label(r.scheme) for r in reports], rotation=20, ha="right")
    ax.set_ylabel("recall (%)")
    ax.set_ylim(0, 100)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_sweep_figure(
    x_name: str, rows: Sequence[tuple[int, "RecallReport"]], path: str | Path
) -> None:
    """Recall@k curves against the swept parameter."""
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [x for x, _ in rows]
    for k in RECALL_COLUMNS:
        ax.plot(xs, [r.recalls[k] for _, r in rows], marker="o", label=f"recall@{k}")
    ax.set_xlabel(x_name)
    ax.set_ylabel("recall (%)")
    ax.set_ylim(0, 100)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
