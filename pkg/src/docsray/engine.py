"""High-level facade tying ingestion, structuring, indexing, and answering
together for the CLI and the HTTP service."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .answer import Answer, answer_query
from .chunk_index import IndexedCorpus, build_index, load_index, make_fingerprints
from .config import EngineConfig, build_fusion, build_llm, build_tokenizer
from .corpus import Document, TokenizerSpec
from .fusion import FusionConfig
from .ingestion import assemble_document, load_paged_layout, load_plain_text, parse_paged_layout
from .providers import LlmBackend
from .pseudo_toc import PseudoTOC, build_pseudo_toc
from .retrieval import RetrievalParams


@dataclass(frozen=True)
class Engine:
    config: EngineConfig
    llm: LlmBackend
    fusion: FusionConfig
    tokenizer: TokenizerSpec

    @classmethod
    def from_config(cls, config: EngineConfig) -> "Engine":
        return cls(config=config, llm=build_llm(config.llm, config.sampling),
                   fusion=build_fusion(config), tokenizer=build_tokenizer(config))

    # -- ingestion ---------------------------------------------------------

    def document_from_text(self, text: str, doc_id: str) -> Document:
        return load_plain_text(text, doc_id=doc_id)

    def document_from_layout_file(self, path: str | Path, doc_id: str) -> Document:
        raw = load_paged_layout(path)
        return assemble_document(raw, self.llm, doc_id=doc_id)

    def document_from_layout_payload(self, payload: dict, base_dir: Path,
                                     doc_id: str) -> Document:
        raw = parse_paged_layout(payload, base_dir)
        return assemble_document(raw, self.llm, doc_id=doc_id)

    # -- structuring and indexing ------------------------------------------

    def build_toc(self, doc: Document) -> PseudoTOC:
        return build_pseudo_toc(doc, self.config.segmentation, self.llm, self.fusion)

    def index(self, doc: Document, toc: PseudoTOC) -> IndexedCorpus:
        return build_index(doc, toc, self.config.chunking, self.fusion,
                           self.tokenizer,
                           normalize_content=self.config.normalize_content_means)

    def ingest_text(self, text: str, doc_id: str) -> IndexedCorpus:
        doc = self.document_from_text(text, doc_id)
        return self.index(doc, self.build_toc(doc))

    def load_index(self, path: str | Path) -> IndexedCorpus:
        expected = make_fingerprints(
            self.tokenizer, self.fusion, self.config.chunking,
            normalize_content=self.config.normalize_content_means)
        return load_index(path, expected_fingerprints=expected)

    # -- querying ----------------------------------------------------------

    def answer(self, query: str, corpus: IndexedCorpus,
               mode: str | None = None, iterations: int | None = None) -> Answer:
        params = self.config.retrieval
        if mode is not None and mode != params.mode:
            params = RetrievalParams(beta=params.beta, k1=params.k1,
                                     k2=params.k2, mode=mode)
        return answer_query(
            query, corpus, params, self.llm, self.fusion,
            iterations=self.config.refinement_iterations if iterations is None else iterations,
            context_budget_chars=self.config.context_budget_chars)


def derive_doc_id(name: str) -> str:
    """A filesystem- and URL-safe document id from a file name."""
    stem = Path(name).stem
    cleaned = re.sub(r"[^A-Za-z0-9_.-]+", "-", stem).strip("-")
    return cleaned or "doc"
