"""Command-line surface: ingest, query, chat, summarize, report, serve.

Exit codes: 0 success, 2 input/parse error, 3 backend error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .answer import render_answer
from .chunk_index import INDEX_SUFFIX, save_index
from .config import load_config
from .engine import Engine, derive_doc_id
from .errors import (BackendError, CapabilityError, IndexFormatError,
                     LayoutParseError, TransportError)
from .pseudo_toc import toc_to_tsv
from .report import default_probe_queries, run_report
from .retrieval import FLAT, HIERARCHICAL, RetrievalParams, retrieve

EXIT_PARSE_ERROR = 2
EXIT_BACKEND_ERROR = 3

_PARSE_ERRORS = (LayoutParseError, IndexFormatError, ValueError, OSError)
_BACKEND_ERRORS = (TransportError, BackendError, CapabilityError)


def _engine(config_path: str | None) -> Engine:
    return Engine.from_config(load_config(config_path))


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _toc_table(corpus_sections) -> str:
    lines = [f"{'section':<28} {'pages':>9}  title"]
    for s in corpus_sections:
        short = s.section_id.rsplit("/", 1)[-1]
        lines.append(f"{short:<28} {s.page_start:>4}-{s.page_end:<4}  {s.title}")
    return "\n".join(lines)


@click.group()
def main() -> None:
    """Document understanding engine: pseudo-TOC structuring and
    coarse-to-fine retrieval."""


@main.command()
@click.argument("path", type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["text", "paged-layout"]),
              default="text", show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help=f"Index output path (default: <doc-id>{INDEX_SUFFIX}).")
@click.option("--doc-id", default=None, help="Override the derived document id.")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
def ingest(path: Path, fmt: str, out_path: Path | None, doc_id: str | None,
           config_path: Path | None) -> None:
    """Ingest a document, build its pseudo-TOC, and persist the index."""
    if not path.is_file():
        _fail(EXIT_PARSE_ERROR, f"input file not found: {path}")
    engine = _engine(config_path)
    doc_id = doc_id or derive_doc_id(path.name)
    try:
        if fmt == "text":
            doc = engine.document_from_text(path.read_text(encoding="utf-8"), doc_id)
        else:
            doc = engine.document_from_layout_file(path, doc_id)
        toc = engine.build_toc(doc)
        corpus = engine.index(doc, toc)
    except _BACKEND_ERRORS as exc:
        _fail(EXIT_BACKEND_ERROR, str(exc))
    except _PARSE_ERRORS as exc:
        _fail(EXIT_PARSE_ERROR, str(exc))
    out_path = out_path or Path(f"{doc_id}{INDEX_SUFFIX}")
    save_index(corpus, out_path)
    click.echo(_toc_table(corpus.sections))
    click.echo(f"\nindexed {corpus.n_chunks} chunks in {corpus.n_sections} sections "
               f"-> {out_path}")


@main.command("export-toc")
@click.argument("index_path", type=click.Path(path_type=Path))
@click.option("--out", "out_path", type=click.Path(path_type=Path), default=None,
              help="Write the TSV here instead of stdout.")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
def export_toc(index_path: Path, out_path: Path | None,
               config_path: Path | None) -> None:
    """Export the pseudo-TOC of an index as a delimited text file."""
    engine = _engine(config_path)
    try:
        corpus = engine.load_index(index_path)
    except _PARSE_ERRORS as exc:
        _fail(EXIT_PARSE_ERROR, str(exc))
    from .pseudo_toc import PseudoTOC, SegmentationParams
    toc = PseudoTOC(sections=corpus.sections,
                    params=engine.config.segmentation)
    tsv = toc_to_tsv(toc)
    if out_path:
        out_path.write_text(tsv, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(tsv, nl=False)


@main.command()
@click.argument("index_path", type=click.Path(path_type=Path))
@click.argument("question")
@click.option("--flat", is_flag=True, help="Score all chunks without section pruning.")
@click.option("--iterations", type=click.IntRange(0, 2), default=None,
              help="Query-refinement rounds (default from config).")
@click.option("--stats", "show_stats", is_flag=True,
              help="Print comparison counts for both retrieval modes.")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
def query(index_path: Path, question: str, flat: bool, iterations: int | None,
          show_stats: bool, config_path: Path | None) -> None:
    """Answer a question against a persisted index."""
    engine = _engine(config_path)
    try:
        corpus = engine.load_index(index_path)
    except _PARSE_ERRORS as exc:
        _fail(EXIT_PARSE_ERROR, str(exc))
    try:
        answer = engine.answer(question, corpus,
                               mode=FLAT if flat else HIERARCHICAL,
                               iterations=iterations)
    except _BACKEND_ERRORS as exc:
        _fail(EXIT_BACKEND_ERROR, str(exc))
    click.echo(render_answer(answer))

    if iterations:
        click.echo("\nRefinement trace:")
        click.echo(f"  q0: {answer.refinement.q0}")
        for i, refined in enumerate(answer.refinement.refined_queries, start=1):
            click.echo(f"  refined {i}: {refined}")
        click.echo(f"  final query: {answer.refinement.final_query}")
        click.echo(f"  retrievals: {len(answer.retrievals)}")

    if show_stats:
        base = engine.config.retrieval
        final_query = answer.refinement.final_query or question
        click.echo("\nStats (final query):")
        for mode in (HIERARCHICAL, FLAT):
            params = RetrievalParams(beta=base.beta, k1=base.k1, k2=base.k2,
                                     mode=mode)
            st = retrieve(final_query, corpus, params, engine.fusion).stats
            click.echo(f"  {mode}: comparisons={st.similarity_comparisons} "
                       f"sections_scored={st.sections_scored} "
                       f"chunks_scored={st.chunks_scored}")


@main.command()
@click.argument("index_path", type=click.Path(path_type=Path))
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
def chat(index_path: Path, config_path: Path | None) -> None:
    """Interactive question loop over one index (:toc lists sections,
    :quit exits)."""
    engine = _engine(config_path)
    try:
        corpus = engine.load_index(index_path)
    except _PARSE_ERRORS as exc:
        _fail(EXIT_PARSE_ERROR, str(exc))
    click.echo(f"loaded {corpus.doc_id}: {corpus.n_sections} sections, "
               f"{corpus.n_chunks} chunks. :toc for contents, :quit to exit.")
    while True:
        try:
            line = input("docsray> ").strip()
        except EOFError:
            break
        if not line:
            continue
        if line == ":quit":
            break
        if line == ":toc":
            click.echo(_toc_table(corpus.sections))
            continue
        try:
            answer = engine.answer(line, corpus)
        except _BACKEND_ERRORS as exc:
            click.echo(f"backend error: {exc}", err=True)
            continue
        click.echo(render_answer(answer))


@main.command()
@click.argument("index_path", type=click.Path(path_type=Path))
@click.option("--mode", type=click.Choice(["brief", "detailed"]), default="brief",
              show_default=True)
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
def summarize(index_path: Path, mode: str, config_path: Path | None) -> None:
    """Print an executive summary plus per-section summaries."""
    from .answer import summarize_document
    engine = _engine(config_path)
    try:
        corpus = engine.load_index(index_path)
    except _PARSE_ERRORS as exc:
        _fail(EXIT_PARSE_ERROR, str(exc))
    try:
        summary = summarize_document(corpus, mode, engine.llm)
    except _BACKEND_ERRORS as exc:
        _fail(EXIT_BACKEND_ERROR, str(exc))
    click.echo(summary.executive)
    for s in summary.sections:
        click.echo(f"\n## {s.title}\n{s.summary}")


@main.command()
@click.argument("index_path", type=click.Path(path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True,
              help="Directory for the CSV and figures.")
@click.option("--queries", "queries_file", type=click.Path(path_type=Path),
              default=None, help="File with one probe query per line "
              "(default: section titles).")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
def report(index_path: Path, out_dir: Path, queries_file: Path | None,
           config_path: Path | None) -> None:
    """Write retrieval-efficiency stats (CSV) and figures for an index."""
    engine = _engine(config_path)
    try:
        corpus = engine.load_index(index_path)
        if queries_file is not None:
            queries = [q.strip() for q in
                       queries_file.read_text(encoding="utf-8").splitlines()
                       if q.strip()]
        else:
            queries = default_probe_queries(corpus)
        paths = run_report(corpus, queries, engine.config.retrieval,
                           engine.fusion, out_dir)
    except _BACKEND_ERRORS as exc:
        _fail(EXIT_BACKEND_ERROR, str(exc))
    except _PARSE_ERRORS as exc:
        _fail(EXIT_PARSE_ERROR, str(exc))
    for name, path in paths.items():
        click.echo(f"{name}: {path}")


@main.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help="Directory for uploaded-document indexes "
              "(existing *.docsray-index files are loaded at startup).")
def serve(config_path: Path | None, host: str, port: int,
          data_dir: Path | None) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .server import create_app

    app = create_app(load_config(config_path), data_dir=data_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
