"""Shared fixtures and helpers: scripted backends and synthetic corpora."""

from __future__ import annotations

import numpy as np
import pytest

from docsray.chunk_index import IndexedCorpus, make_fingerprints
from docsray.corpus import Chunk, Section, get_tokenizer
from docsray.fusion import DualEmbedding, FusionConfig, embed_text
from docsray.chunk_index import ChunkingParams
from docsray.providers import LlmBackend, LlmRequest, MockEmbedder


class ScriptedLlm(LlmBackend):
    """Replays a fixed list of replies and records every prompt."""

    backend_id = "scripted-llm"

    def __init__(self, replies, supports_vision: bool = True):
        self.replies = list(replies)
        self.supports_vision = supports_vision
        self.requests: list[LlmRequest] = []

    def complete(self, request: LlmRequest) -> str:
        self._check_vision(request)
        self.requests.append(request)
        if not self.replies:
            raise AssertionError("ScriptedLlm ran out of replies")
        return self.replies.pop(0)


class CountingLlm(LlmBackend):
    """Wraps another backend and counts calls per prompt kind."""

    def __init__(self, inner: LlmBackend):
        self.inner = inner
        self.supports_vision = inner.supports_vision
        self.backend_id = inner.backend_id
        self.prompts: list[str] = []

    def complete(self, request: LlmRequest) -> str:
        self.prompts.append(request.user_prompt)
        return self.inner.complete(request)


def make_fusion(dim_a: int = 8, dim_b: int = 8, mode: str = "concat") -> FusionConfig:
    return FusionConfig(backend_a=MockEmbedder(output_dim=dim_a, backend_id="mock-a"),
                        backend_b=MockEmbedder(output_dim=dim_b, backend_id="mock-b"),
                        mode=mode)


def quantize(emb: DualEmbedding) -> DualEmbedding:
    return DualEmbedding(values=emb.values.astype("<f4"), fusion_mode=emb.fusion_mode)


def build_synthetic_corpus(section_specs: list[tuple[str, list[str]]],
                           fusion: FusionConfig | None = None,
                           doc_id: str = "synth",
                           n_pages_per_section: int = 3) -> IndexedCorpus:
    """Assemble an IndexedCorpus directly from (title, [chunk texts]) specs,
    mirroring build_index's float32 quantization."""
    fusion = fusion or make_fusion()
    sections: list[Section] = []
    texts: list[str] = []
    chunks: list[Chunk] = []
    page = 0
    for i, (title, chunk_texts) in enumerate(section_specs):
        section_id = f"{doc_id}/s{i}"
        embedded = []
        for j, text in enumerate(chunk_texts):
            embedded.append(Chunk(chunk_id=f"{doc_id}/s{i}/c{j}", section_id=section_id,
                                  text=text, token_span=(0, len(text.split())),
                                  embedding=quantize(embed_text(text, fusion))))
        title_emb = quantize(embed_text(title, fusion))
        if embedded:
            stacked = np.stack([c.embedding.values.astype(np.float64) for c in embedded])
            content = quantize(DualEmbedding(values=stacked.mean(axis=0),
                                             fusion_mode=fusion.mode))
        else:
            content = title_emb
        sections.append(Section(section_id=section_id, title=title,
                                page_start=page, page_end=page + n_pages_per_section - 1,
                                title_embedding=title_emb, content_embedding=content))
        texts.append("\n".join(chunk_texts))
        chunks.extend(embedded)
        page += n_pages_per_section
    return IndexedCorpus(
        doc_id=doc_id, n_pages=page, source_kind="plain_text",
        sections=tuple(sections), section_texts=tuple(texts), chunks=tuple(chunks),
        fingerprints=make_fingerprints(get_tokenizer(), fusion, ChunkingParams()))


@pytest.fixture
def fusion8() -> FusionConfig:
    return make_fusion(8, 8)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    reports = (terminalreporter.getreports("passed")
               + terminalreporter.getreports("failed"))
    acceptance = [r for r in reports if "test_acceptance" in r.nodeid]
    if not acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for report in sorted(acceptance, key=lambda r: r.nodeid):
        status = "PASS" if report.passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {report.nodeid.split('::')[-1]}")
