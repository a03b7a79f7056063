"""Pseudo table-of-contents generation in three phases: LLM boundary
detection over page chunks, similarity-driven merging of undersized sections,
and LLM title generation.

Boundaries land only at page-chunk granularity (multiples of the initial
chunk size); the section list stays a flat exact partition of the pages at
every phase.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .corpus import Document, Section, check_partition, section_id_for
from .fusion import FusionConfig, cosine, embed_text
from .prompts import boundary_prompt, title_prompt
from .providers import LlmBackend, LlmRequest

logger = logging.getLogger(__name__)

TITLE_SAMPLE_CHARS = 1500


@dataclass(frozen=True)
class SegmentationParams:
    k: int = 5            # initial chunk size in pages
    m: int = 3            # min pages per section
    max_pages: int = 15   # advisory only; no splitting rule is applied
    excerpt_chars: int = 500

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 1 <= self.m <= self.max_pages:
            raise ValueError("need 1 <= m <= max_pages")


@dataclass(frozen=True)
class BoundarySet:
    boundaries: tuple[int, ...]  # sorted page indices, always containing 0

    def __post_init__(self) -> None:
        if not self.boundaries or self.boundaries[0] != 0:
            raise ValueError("boundaries must start at page 0")
        if list(self.boundaries) != sorted(set(self.boundaries)):
            raise ValueError("boundaries must be strictly increasing")


@dataclass(frozen=True)
class PseudoTOC:
    sections: tuple[Section, ...]
    params: SegmentationParams
    metadata: dict = field(default_factory=dict, compare=False)


def _page_chunks(doc: Document, k: int) -> list[str]:
    """Join pages into ceil(n/k) consecutive chunks of k pages."""
    texts = [p.full_text for p in doc.pages]
    return ["\n".join(texts[i:i + k]) for i in range(0, len(texts), k)]


def initial_segmentation(doc: Document, params: SegmentationParams,
                         llm: LlmBackend) -> BoundarySet:
    """Phase 1: ask the LLM whether each adjacent page-chunk pair changes
    topic; a "1" reply plants a boundary at that chunk's first page.

    Issues exactly max(0, ceil(n/k) - 1) LLM calls. Replies other than
    "0"/"1" count as continuation so noise cannot shred the document.
    """
    chunks = _page_chunks(doc, params.k)
    boundaries = [0]
    for i in range(1, len(chunks)):
        tail = chunks[i - 1][-params.excerpt_chars:]
        head = chunks[i][:params.excerpt_chars]
        reply = llm.complete(LlmRequest(user_prompt=boundary_prompt(tail, head))).strip()
        if reply == "1":
            boundaries.append(i * params.k)
        elif reply != "0":
            logger.warning("boundary reply %r is not 0/1; treating as continuation",
                           reply[:40])
    return BoundarySet(boundaries=tuple(boundaries))


def sections_from_boundaries(doc: Document, bounds: BoundarySet) -> list[Section]:
    starts = list(bounds.boundaries)
    ends = [s - 1 for s in starts[1:]] + [doc.n_pages - 1]
    return [Section(section_id=f"{doc.doc_id}/phase1/{i}", title="",
                    page_start=start, page_end=end)
            for i, (start, end) in enumerate(zip(starts, ends))]


def merge_small_sections(doc: Document, sections: list[Section],
                         params: SegmentationParams,
                         fusion_cfg: FusionConfig) -> list[Section]:
    """Phase 2: repeatedly merge sections spanning fewer than m pages into
    the more-similar neighbor (ties go to the next section) until none
    remain undersized or a single section is left.

    A single-pass sweep can leave undersized residue once merges change
    spans, so this runs to fixpoint; it terminates because every merge
    removes one section.
    """
    current = list(sections)
    cache: dict[tuple[int, int], object] = {}

    def content_embedding(section: Section):
        key = (section.page_start, section.page_end)
        if key not in cache:
            # Image-only pages can leave a section textless; a positional
            # placeholder keeps the similarity comparison well-defined.
            text = doc.page_range_text(*key) or f"empty pages {key[0]} {key[1]}"
            cache[key] = embed_text(text, fusion_cfg)
        return cache[key]

    def merge(a: Section, b: Section) -> Section:
        return Section(section_id=a.section_id, title="",
                       page_start=a.page_start, page_end=b.page_end)

    while len(current) > 1:
        undersized = next((i for i, s in enumerate(current) if s.n_pages < params.m), None)
        if undersized is None:
            break
        i = undersized
        if i == 0:
            merged = merge(current[0], current[1])
            current = [merged] + current[2:]
        elif i == len(current) - 1:
            merged = merge(current[i - 1], current[i])
            current = current[:i - 1] + [merged]
        else:
            e_this = content_embedding(current[i])
            sim_prev = cosine(e_this, content_embedding(current[i - 1]))
            sim_next = cosine(e_this, content_embedding(current[i + 1]))
            if sim_prev > sim_next:
                merged = merge(current[i - 1], current[i])
                current = current[:i - 1] + [merged] + current[i + 1:]
            else:
                merged = merge(current[i], current[i + 1])
                current = current[:i] + [merged] + current[i + 2:]
    return current


def generate_titles(doc: Document, sections: list[Section],
                    llm: LlmBackend) -> list[Section]:
    """Phase 3: title each section from the head of its text (introductory
    passages carry the topic); blank replies fall back to a positional title.
    """
    titled: list[Section] = []
    for i, section in enumerate(sections):
        sample = doc.page_range_text(section.page_start, section.page_end)[:TITLE_SAMPLE_CHARS]
        title = ""
        if sample.strip():
            reply = llm.complete(LlmRequest(user_prompt=title_prompt(sample)))
            lines = [ln.strip() for ln in reply.strip().splitlines() if ln.strip()]
            title = lines[0] if lines else ""
        if not title:
            title = f"Section {i + 1} (pages {section.page_start}–{section.page_end})"
            logger.warning("section %d: empty title reply; using fallback %r", i, title)
        titled.append(Section(section_id=section.section_id, title=title,
                              page_start=section.page_start, page_end=section.page_end))
    return titled


def build_pseudo_toc(doc: Document, params: SegmentationParams,
                     llm: LlmBackend, fusion_cfg: FusionConfig) -> PseudoTOC:
    """Run all three phases and return the final titled, partitioned TOC."""
    bounds = initial_segmentation(doc, params, llm)
    sections = sections_from_boundaries(doc, bounds)
    check_partition(sections, doc.n_pages)
    sections = merge_small_sections(doc, sections, params, fusion_cfg)
    check_partition(sections, doc.n_pages)
    sections = generate_titles(doc, sections, llm)
    final = [Section(section_id=section_id_for(doc.doc_id, i), title=s.title,
                     page_start=s.page_start, page_end=s.page_end)
             for i, s in enumerate(sections)]
    check_partition(final, doc.n_pages)
    return PseudoTOC(sections=tuple(final), params=params,
                     metadata={"llm_backend": llm.backend_id,
                               "generated_at": time.time()})


def toc_to_tsv(toc: PseudoTOC) -> str:
    """Delimited export: one record per section."""
    lines = ["section_id\ttitle\tpage_start\tpage_end"]
    for s in toc.sections:
        lines.append(f"{s.section_id}\t{s.title}\t{s.page_start}\t{s.page_end}")
    return "\n".join(lines) + "\n"
