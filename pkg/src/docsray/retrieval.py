"""Two-stage coarse-to-fine retrieval with comparison-count accounting, plus
the flat (no-pruning) ablation mode.

Scores are computed in float64 regardless of the float32 storage, and every
tie breaks deterministically: coarse by section position, fine/flat by
ascending (section_id, chunk_id).
"""

from __future__ import annotations

from dataclasses import dataclass

from .chunk_index import IndexedCorpus
from .corpus import Chunk, Section
from .fusion import DualEmbedding, FusionConfig, cosine, embed_text

HIERARCHICAL = "hierarchical"
FLAT = "flat"


@dataclass(frozen=True)
class RetrievalParams:
    beta: float = 0.3
    k1: int = 5   # sections kept by coarse search
    k2: int = 10  # chunks returned by fine search
    mode: str = HIERARCHICAL

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("k1 and k2 must be >= 1")
        if self.mode not in (HIERARCHICAL, FLAT):
            raise ValueError(f"unknown retrieval mode {self.mode!r}")


@dataclass(frozen=True)
class QueryEmbedding:
    embedding: DualEmbedding
    query: str


@dataclass(frozen=True)
class Hit:
    chunk_id: str
    section_id: str
    score: float


@dataclass(frozen=True)
class RetrievalStats:
    """similarity_comparisons counts one unit per section or chunk scored;
    raw_dot_products additionally counts the two cosines behind each
    section-scoring unit."""

    mode: str
    similarity_comparisons: int
    sections_scored: int
    chunks_scored: int
    raw_dot_products: int


@dataclass(frozen=True)
class RetrievalResult:
    hits: tuple[Hit, ...]
    consulted_sections: tuple[str, ...]
    stats: RetrievalStats
    query: str


def embed_query(query: str, fusion_cfg: FusionConfig) -> QueryEmbedding:
    if not query or not query.strip():
        raise ValueError("query must be non-empty")
    return QueryEmbedding(embedding=embed_text(query, fusion_cfg), query=query)


def score_section(e_q: DualEmbedding, section: Section, beta: float) -> float:
    """Weighted interpolation of title and content similarity; the content
    cosine normalizes the (possibly un-normalized) mean vector internally."""
    return (beta * cosine(e_q, section.title_embedding)
            + (1.0 - beta) * cosine(e_q, section.content_embedding))


def coarse_search(e_q: QueryEmbedding, corpus: IndexedCorpus,
                  params: RetrievalParams) -> list[Section]:
    """Score every section; keep the best k1 (all when S < k1), ties broken
    by document order."""
    scored = [(score_section(e_q.embedding, s, params.beta), i)
              for i, s in enumerate(corpus.sections)]
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return [corpus.sections[i] for _, i in scored[:params.k1]]


def _rank_chunks(e_q: QueryEmbedding, chunks: list[Chunk], k2: int) -> list[Hit]:
    hits = [Hit(chunk_id=c.chunk_id, section_id=c.section_id,
                score=cosine(e_q.embedding, c.embedding))
            for c in chunks]
    hits.sort(key=lambda h: (-h.score, h.section_id, h.chunk_id))
    return hits[:k2]


def fine_search(e_q: QueryEmbedding, corpus: IndexedCorpus,
                selected_sections: list[Section], k2: int) -> list[Hit]:
    """Rank only chunks belonging to the selected sections."""
    selected_ids = {s.section_id for s in selected_sections}
    candidates = [c for c in corpus.chunks if c.section_id in selected_ids]
    return _rank_chunks(e_q, candidates, k2)


def flat_search(e_q: QueryEmbedding, corpus: IndexedCorpus, k2: int) -> list[Hit]:
    """Ablation baseline: rank all N chunks with no section pruning."""
    return _rank_chunks(e_q, list(corpus.chunks), k2)


def _consulted(hits: list[Hit]) -> tuple[str, ...]:
    seen: list[str] = []
    for h in hits:
        if h.section_id not in seen:
            seen.append(h.section_id)
    return tuple(seen)


def retrieve(query: str, corpus: IndexedCorpus, params: RetrievalParams,
             fusion_cfg: FusionConfig) -> RetrievalResult:
    """Embed the query and run the configured retrieval mode.

    Hierarchical comparisons are S + sum of N_s over selected sections; flat
    comparisons are N.
    """
    e_q = embed_query(query, fusion_cfg)
    per_section = corpus.chunks_per_section()
    if params.mode == FLAT:
        hits = flat_search(e_q, corpus, params.k2)
        stats = RetrievalStats(mode=FLAT,
                               similarity_comparisons=corpus.n_chunks,
                               sections_scored=0,
                               chunks_scored=corpus.n_chunks,
                               raw_dot_products=corpus.n_chunks)
    else:
        selected = coarse_search(e_q, corpus, params)
        hits = fine_search(e_q, corpus, selected, params.k2)
        chunks_scored = sum(per_section[s.section_id] for s in selected)
        stats = RetrievalStats(
            mode=HIERARCHICAL,
            similarity_comparisons=corpus.n_sections + chunks_scored,
            sections_scored=corpus.n_sections,
            chunks_scored=chunks_scored,
            raw_dot_products=2 * corpus.n_sections + chunks_scored)
    return RetrievalResult(hits=tuple(hits), consulted_sections=_consulted(hits),
                           stats=stats, query=query)
