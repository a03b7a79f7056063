"""Retrieval-efficiency reporting: per-query comparison counts for both
retrieval modes as CSV, with companion figures rendered to files."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first

from .chunk_index import IndexedCorpus
from .fusion import FusionConfig
from .retrieval import FLAT, HIERARCHICAL, RetrievalParams, retrieve

STATS_CSV = "retrieval_stats.csv"
COMPARISONS_PNG = "comparisons.png"
SECTIONS_PNG = "section_profile.png"


def default_probe_queries(corpus: IndexedCorpus) -> list[str]:
    """Section titles double as probe queries when none are supplied."""
    return [s.title for s in corpus.sections if s.title.strip()]


def run_report(corpus: IndexedCorpus, queries: list[str],
               params: RetrievalParams, fusion_cfg: FusionConfig,
               out_dir: str | Path) -> dict[str, Path]:
    """Run every query in both modes, write the stats CSV and the figures.

    Returns the paths written, keyed by artifact name.
    """
    if not queries:
        raise ValueError("report needs at least one query")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for query in queries:
        for mode in (HIERARCHICAL, FLAT):
            mode_params = RetrievalParams(beta=params.beta, k1=params.k1,
                                          k2=params.k2, mode=mode)
            result = retrieve(query, corpus, mode_params, fusion_cfg)
            top = result.hits[0] if result.hits else None
            rows.append({
                "query": query,
                "mode": mode,
                "similarity_comparisons": result.stats.similarity_comparisons,
                "sections_scored": result.stats.sections_scored,
                "chunks_scored": result.stats.chunks_scored,
                "hits": len(result.hits),
                "top_chunk_id": top.chunk_id if top else "",
                "top_score": f"{top.score:.6f}" if top else "",
            })

    csv_path = out / STATS_CSV
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    paths = {"stats": csv_path}
    paths["comparisons"] = _plot_comparisons(rows, queries, out)
    paths["sections"] = _plot_section_profile(corpus, out)
    return paths


def _plot_comparisons(rows: list[dict], queries: list[str], out: Path) -> Path:
    hier = [r["similarity_comparisons"] for r in rows if r["mode"] == HIERARCHICAL]
    flat = [r["similarity_comparisons"] for r in rows if r["mode"] == FLAT]
    x = range(len(queries))
    fig, ax = plt.subplots(figsize=(max(6, len(queries) * 0.8), 4))
    width = 0.4
    ax.bar([i - width / 2 for i in x], hier, width=width, label="hierarchical")
    ax.bar([i + width / 2 for i in x], flat, width=width, label="flat")
    ax.set_xticks(list(x))
    ax.set_xticklabels([q[:24] for q in queries], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("similarity comparisons")
    ax.set_title("Retrieval cost per query: hierarchical vs flat")
    ax.legend()
    fig.tight_layout()
    path = out / COMPARISONS_PNG
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _plot_section_profile(corpus: IndexedCorpus, out: Path) -> Path:
    per_section = corpus.chunks_per_section()
    labels = [s.section_id.rsplit("/", 1)[-1] for s in corpus.sections]
    pages = [s.n_pages for s in corpus.sections]
    chunks = [per_section[s.section_id] for s in corpus.sections]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(max(8, len(labels) * 0.6), 4))
    ax1.bar(labels, pages)
    ax1.set_ylabel("pages")
    ax1.set_title("Pages per section")
    ax2.bar(labels, chunks)
    ax2.set_ylabel("chunks")
    ax2.set_title("Chunks per section")
    for ax in (ax1, ax2):
        ax.tick_params(axis="x", rotation=45, labelsize=8)
    fig.tight_layout()
    path = out / SECTIONS_PNG
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
