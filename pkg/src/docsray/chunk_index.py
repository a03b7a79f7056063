"""Section-aligned sliding-window chunking, section representations, and the
persistent index container.

Embeddings are quantized to little-endian float32 at build time so that the
in-memory corpus, the bytes on disk, and a reloaded corpus are all bit-equal;
scoring upcasts to float64.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Chunk, Document, Section, TokenizerSpec, chunk_id_for
from .errors import IndexFormatError
from .fusion import DualEmbedding, FusionConfig, embed_text
from .pseudo_toc import PseudoTOC

logger = logging.getLogger(__name__)

INDEX_FORMAT = "docsray-index"
INDEX_VERSION = 1
INDEX_SUFFIX = ".docsray-index"


@dataclass(frozen=True)
class ChunkingParams:
    window_tokens: int = 550
    overlap_tokens: int = 25
    min_tail_tokens: int = 50

    def __post_init__(self) -> None:
        if not 0 <= self.overlap_tokens < self.window_tokens:
            raise ValueError("need 0 <= overlap < window")
        if self.min_tail_tokens > self.window_tokens:
            raise ValueError("min_tail must be <= window")

    @property
    def stride(self) -> int:
        return self.window_tokens - self.overlap_tokens


def chunk_spans(n_tokens: int, params: ChunkingParams) -> list[tuple[int, int]]:
    """Token spans for a section of ``n_tokens``: windows start at stride
    multiples, the final window clips at the end, and a tail shorter than
    min_tail_tokens merges into the previous chunk."""
    if n_tokens <= 0:
        return []
    spans: list[tuple[int, int]] = []
    start = 0
    while start < n_tokens:
        spans.append((start, min(start + params.window_tokens, n_tokens)))
        start += params.stride
    if len(spans) >= 2:
        last_start, last_end = spans[-1]
        if last_end - last_start < params.min_tail_tokens:
            prev_start, _ = spans[-2]
            spans[-2:] = [(prev_start, last_end)]
    return spans


def chunk_section(section_text: str, params: ChunkingParams,
                  tokenizer: TokenizerSpec, section_id: str = "s",
                  doc_id: str = "doc", section_index: int = 0) -> list[Chunk]:
    """Cut one section into chunks; never crosses the section boundary."""
    tokens = tokenizer.tokenize(section_text)
    chunks: list[Chunk] = []
    for j, (start, end) in enumerate(chunk_spans(len(tokens), params)):
        char_start = tokens[start].start
        char_end = tokens[end - 1].end
        chunks.append(Chunk(
            chunk_id=chunk_id_for(doc_id, section_index, j),
            section_id=section_id,
            text=section_text[char_start:char_end],
            token_span=(start, end),
        ))
    return chunks


def _quantize(emb: DualEmbedding) -> DualEmbedding:
    return DualEmbedding(values=emb.values.astype("<f4"), fusion_mode=emb.fusion_mode)


def compute_section_representation(
        section: Section, chunks: list[Chunk], fusion_cfg: FusionConfig,
        normalize_content: bool = False) -> tuple[DualEmbedding, DualEmbedding]:
    """(title embedding, content embedding) for coarse search.

    The content embedding is the plain componentwise mean of the chunk
    embeddings, by default not re-normalized: cosine is scale-invariant so
    rankings are unaffected. ``normalize_content`` re-normalizes the mean for
    experimentation. A chunkless section reuses its title embedding as
    content so it stays retrievable.
    """
    title_emb = embed_text(section.title, fusion_cfg)
    if not chunks:
        logger.warning("section %s has no chunks; content embedding falls back "
                       "to the title embedding", section.section_id)
        return title_emb, title_emb
    stacked = np.stack([c.embedding.values.astype(np.float64) for c in chunks])
    mean = stacked.mean(axis=0)
    if normalize_content:
        mean = mean / np.linalg.norm(mean)
    return title_emb, DualEmbedding(values=mean, fusion_mode=fusion_cfg.mode)


@dataclass(frozen=True)
class IndexedCorpus:
    """A fully embedded, immutable single-document corpus."""

    doc_id: str
    n_pages: int
    source_kind: str
    sections: tuple[Section, ...]
    section_texts: tuple[str, ...]
    chunks: tuple[Chunk, ...]
    fingerprints: dict = field(compare=False)

    def __post_init__(self) -> None:
        if len(self.sections) != len(self.section_texts):
            raise ValueError("sections and section_texts must align")
        ids = {s.section_id for s in self.sections}
        for c in self.chunks:
            if c.section_id not in ids:
                raise ValueError(f"chunk {c.chunk_id} references unknown section "
                                 f"{c.section_id}")

    @property
    def n_chunks(self) -> int:
        return len(self.chunks)

    @property
    def n_sections(self) -> int:
        return len(self.sections)

    def chunks_per_section(self) -> dict[str, int]:
        counts = {s.section_id: 0 for s in self.sections}
        for c in self.chunks:
            counts[c.section_id] += 1
        return counts

    def chunks_of(self, section_id: str) -> list[Chunk]:
        return [c for c in self.chunks if c.section_id == section_id]

    def section_by_id(self, section_id: str) -> Section:
        for s in self.sections:
            if s.section_id == section_id:
                return s
        raise KeyError(section_id)


def make_fingerprints(tokenizer: TokenizerSpec, fusion_cfg: FusionConfig,
                      params: ChunkingParams,
                      normalize_content: bool = False) -> dict:
    return {
        "tokenizer_id": tokenizer.tokenizer_id,
        "fusion_mode": fusion_cfg.mode,
        "embedder_a": cfg_id(fusion_cfg.backend_a),
        "embedder_b": cfg_id(fusion_cfg.backend_b),
        "embedding_dim": fusion_cfg.output_dim,
        "window_tokens": params.window_tokens,
        "overlap_tokens": params.overlap_tokens,
        "min_tail_tokens": params.min_tail_tokens,
        "content_means": "normalized" if normalize_content else "raw",
    }


def cfg_id(backend) -> str:
    return f"{backend.backend_id}/{backend.output_dim}"


def build_index(doc: Document, toc: PseudoTOC, chunking_params: ChunkingParams,
                fusion_cfg: FusionConfig, tokenizer: TokenizerSpec,
                normalize_content: bool = False) -> IndexedCorpus:
    """Chunk and embed every section; any embedding failure aborts the build
    so a partial index can never be persisted."""
    sections_out: list[Section] = []
    section_texts: list[str] = []
    all_chunks: list[Chunk] = []
    for i, section in enumerate(toc.sections):
        text = doc.page_range_text(section.page_start, section.page_end)
        section_texts.append(text)
        chunks = chunk_section(text, chunking_params, tokenizer,
                               section_id=section.section_id,
                               doc_id=doc.doc_id, section_index=i)
        embedded = [Chunk(chunk_id=c.chunk_id, section_id=c.section_id, text=c.text,
                          token_span=c.token_span,
                          embedding=_quantize(embed_text(c.text, fusion_cfg)))
                    for c in chunks]
        title_emb, content_emb = compute_section_representation(
            section, embedded, fusion_cfg, normalize_content=normalize_content)
        sections_out.append(Section(
            section_id=section.section_id, title=section.title,
            page_start=section.page_start, page_end=section.page_end,
            title_embedding=_quantize(title_emb),
            content_embedding=_quantize(content_emb)))
        all_chunks.extend(embedded)
    if not all_chunks:
        raise ValueError(f"document {doc.doc_id} has no indexable text: "
                         "nothing to chunk")
    return IndexedCorpus(
        doc_id=doc.doc_id, n_pages=doc.n_pages, source_kind=doc.source_kind,
        sections=tuple(sections_out), section_texts=tuple(section_texts),
        chunks=tuple(all_chunks),
        fingerprints=make_fingerprints(tokenizer, fusion_cfg, chunking_params,
                                       normalize_content=normalize_content))


# --------------------------------------------------------------------------
# Persistence: one-line JSON header + little-endian float32 payload rows.
# Row order: per section title then content embedding, then all chunks.
# --------------------------------------------------------------------------


def _payload_bytes(corpus: IndexedCorpus) -> bytes:
    rows: list[np.ndarray] = []
    for s in corpus.sections:
        rows.append(s.title_embedding.values.astype("<f4"))
        rows.append(s.content_embedding.values.astype("<f4"))
    for c in corpus.chunks:
        rows.append(c.embedding.values.astype("<f4"))
    return b"".join(r.tobytes() for r in rows)


def save_index(corpus: IndexedCorpus, path: str | Path) -> None:
    path = Path(path)
    payload = _payload_bytes(corpus)
    per_section = corpus.chunks_per_section()
    header = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "doc": {"doc_id": corpus.doc_id, "n_pages": corpus.n_pages,
                "source_kind": corpus.source_kind},
        "counts": {"n_chunks": corpus.n_chunks, "n_sections": corpus.n_sections,
                   "per_section": [per_section[s.section_id] for s in corpus.sections]},
        "fingerprints": corpus.fingerprints,
        "embedding": {"dim": int(corpus.fingerprints["embedding_dim"]),
                      "fusion_mode": corpus.fingerprints["fusion_mode"]},
        "sections": [{"section_id": s.section_id, "title": s.title,
                      "page_start": s.page_start, "page_end": s.page_end,
                      "text": t}
                     for s, t in zip(corpus.sections, corpus.section_texts)],
        "chunks": [{"chunk_id": c.chunk_id, "section_id": c.section_id,
                    "text": c.text, "token_span": list(c.token_span)}
                   for c in corpus.chunks],
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }
    line = json.dumps(header, sort_keys=True, ensure_ascii=True,
                      separators=(",", ":"))
    path.write_bytes(line.encode("ascii") + b"\n" + payload)


def load_index(path: str | Path,
               expected_fingerprints: dict | None = None) -> IndexedCorpus:
    """Read an index file back; refuses wrong versions, detects corruption via
    the payload checksum, and warns when fingerprints differ from the current
    configuration."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise IndexFormatError(f"cannot read index {path}: {exc}") from exc
    newline = blob.find(b"\n")
    if newline < 0:
        raise IndexFormatError(f"{path}: missing header line")
    try:
        header = json.loads(blob[:newline].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IndexFormatError(f"{path}: corrupt header: {exc}") from exc
    if header.get("format") != INDEX_FORMAT or header.get("version") != INDEX_VERSION:
        raise IndexFormatError(
            f"{path}: unsupported index format/version "
            f"{header.get('format')!r}/{header.get('version')!r}; "
            f"this reader handles {INDEX_FORMAT}/{INDEX_VERSION}")
    payload = blob[newline + 1:]
    if hashlib.sha256(payload).hexdigest() != header.get("payload_sha256"):
        raise IndexFormatError(f"{path}: payload checksum mismatch (truncated or "
                               "corrupted file)")

    dim = int(header["embedding"]["dim"])
    mode = header["embedding"]["fusion_mode"]
    n_sections = len(header["sections"])
    n_chunks = len(header["chunks"])
    expected_rows = n_sections * 2 + n_chunks
    matrix = np.frombuffer(payload, dtype="<f4")
    if matrix.size != expected_rows * dim:
        raise IndexFormatError(f"{path}: payload holds {matrix.size} floats, "
                               f"expected {expected_rows * dim}")
    matrix = matrix.reshape(expected_rows, dim)

    def emb(row: int) -> DualEmbedding:
        return DualEmbedding(values=matrix[row].copy(), fusion_mode=mode)

    sections: list[Section] = []
    section_texts: list[str] = []
    for i, rec in enumerate(header["sections"]):
        sections.append(Section(
            section_id=rec["section_id"], title=rec["title"],
            page_start=rec["page_start"], page_end=rec["page_end"],
            title_embedding=emb(2 * i), content_embedding=emb(2 * i + 1)))
        section_texts.append(rec["text"])
    chunks: list[Chunk] = []
    for j, rec in enumerate(header["chunks"]):
        chunks.append(Chunk(
            chunk_id=rec["chunk_id"], section_id=rec["section_id"],
            text=rec["text"], token_span=tuple(rec["token_span"]),
            embedding=emb(2 * n_sections + j)))

    fingerprints = header["fingerprints"]
    if expected_fingerprints is not None and fingerprints != expected_fingerprints:
        diff = {k: (fingerprints.get(k), expected_fingerprints.get(k))
                for k in set(fingerprints) | set(expected_fingerprints)
                if fingerprints.get(k) != expected_fingerprints.get(k)}
        logger.warning("index %s was built under a different configuration: %s",
                       path, diff)
    return IndexedCorpus(
        doc_id=header["doc"]["doc_id"], n_pages=header["doc"]["n_pages"],
        source_kind=header["doc"]["source_kind"],
        sections=tuple(sections), section_texts=tuple(section_texts),
        chunks=tuple(chunks), fingerprints=fingerprints)
