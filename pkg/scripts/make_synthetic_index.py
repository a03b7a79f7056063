#!/usr/bin/env python3
"""Build the 1000-chunk / 20-section synthetic benchmark index.

Used by the efficiency demos and the frontend e2e test: hierarchical
retrieval over this corpus records exactly 270 comparisons (20 sections +
5 * 50 chunks) vs 1000 flat.

Usage: make_synthetic_index.py OUT_PATH [--doc-id synthetic]
"""

import argparse

import numpy as np

from docsray.chunk_index import (ChunkingParams, IndexedCorpus, make_fingerprints,
                                 save_index)
from docsray.config import EngineConfig, build_fusion, build_tokenizer
from docsray.corpus import Chunk, Section
from docsray.fusion import DualEmbedding, embed_text


def quantize(emb: DualEmbedding) -> DualEmbedding:
    return DualEmbedding(values=emb.values.astype("<f4"), fusion_mode=emb.fusion_mode)


def build(doc_id: str) -> IndexedCorpus:
    config = EngineConfig()
    fusion = build_fusion(config)
    sections, texts, chunks = [], [], []
    for i in range(20):
        section_id = f"{doc_id}/s{i}"
        chunk_texts = [f"topic {i} chunk {j} body" for j in range(50)]
        embedded = [Chunk(chunk_id=f"{doc_id}/s{i}/c{j}", section_id=section_id,
                          text=t, token_span=(0, len(t.split())),
                          embedding=quantize(embed_text(t, fusion)))
                    for j, t in enumerate(chunk_texts)]
        mean = np.stack([c.embedding.values.astype(np.float64)
                         for c in embedded]).mean(axis=0)
        sections.append(Section(
            section_id=section_id, title=f"topic {i} heading",
            page_start=3 * i, page_end=3 * i + 2,
            title_embedding=quantize(embed_text(f"topic {i} heading", fusion)),
            content_embedding=quantize(DualEmbedding(values=mean,
                                                     fusion_mode=fusion.mode))))
        texts.append("\n".join(chunk_texts))
        chunks.extend(embedded)
    return IndexedCorpus(
        doc_id=doc_id, n_pages=60, source_kind="plain_text",
        sections=tuple(sections), section_texts=tuple(texts), chunks=tuple(chunks),
        fingerprints=make_fingerprints(build_tokenizer(config), fusion,
                                       ChunkingParams()))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_path")
    parser.add_argument("--doc-id", default="synthetic")
    args = parser.parse_args()
    corpus = build(args.doc_id)
    save_index(corpus, args.out_path)
    print(f"wrote {args.out_path}: N={corpus.n_chunks} S={corpus.n_sections}")


if __name__ == "__main__":
    main()
