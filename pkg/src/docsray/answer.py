"""Answer generation: RAG over retrieved chunks with iterative query
refinement, alternative-query expansion, document summarization, and
section-level source attribution."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import prompts
from .chunk_index import IndexedCorpus
from .fusion import FusionConfig
from .providers import LlmBackend, LlmRequest
from .retrieval import Hit, RetrievalParams, RetrievalResult, retrieve

logger = logging.getLogger(__name__)

MAX_REFINEMENT_ITERATIONS = 2
DEFAULT_CONTEXT_BUDGET_CHARS = 8000
NO_CONTENT_MESSAGE = "No relevant content found in the document."
UNSUMMARIZED_MARKER = "(section could not be summarized)"
EMPTY_SECTION_MARKER = "(no content)"


@dataclass(frozen=True)
class RefinementState:
    q0: str
    refined_queries: tuple[str, ...] = ()
    final_query: str = ""

    def __post_init__(self) -> None:
        if len(self.refined_queries) > MAX_REFINEMENT_ITERATIONS:
            raise ValueError("at most 2 refinement iterations")


@dataclass(frozen=True)
class Reference:
    title: str
    page_start: int
    page_end: int


@dataclass(frozen=True)
class Answer:
    text: str
    references: tuple[Reference, ...]
    retrievals: tuple[RetrievalResult, ...]  # one per retrieval round, in order
    refinement: RefinementState

    @property
    def final_retrieval(self) -> RetrievalResult:
        return self.retrievals[-1]


def _chunk_text(corpus: IndexedCorpus, chunk_id: str) -> str:
    for c in corpus.chunks:
        if c.chunk_id == chunk_id:
            return c.text
    raise KeyError(chunk_id)


def refine_query(q0: str, hits: list[Hit], corpus: IndexedCorpus,
                 llm: LlmBackend) -> str:
    """One LLM follow-up question from the current hits; empty reply means
    the refinement is skipped."""
    if not hits:
        raise ValueError("refine_query needs at least one hit")
    combined = "\n\n".join(_chunk_text(corpus, h.chunk_id) for h in hits)
    reply = llm.complete(LlmRequest(
        user_prompt=prompts.refinement_prompt(q0, combined)))
    lines = [ln.strip() for ln in reply.strip().splitlines() if ln.strip()]
    return lines[0] if lines else ""


def compose_refined_query(q0: str, refined: str) -> str:
    """Append the refinement while keeping the original query as a prefix."""
    if not q0 or not refined:
        raise ValueError("both query parts must be non-empty")
    return f"{q0}: {refined}"


def _assemble_context(corpus: IndexedCorpus, hits: tuple[Hit, ...],
                      budget_chars: int) -> str:
    """Hits in rank order, each prefixed with its section locator; whole
    entries are appended until the budget would be exceeded."""
    entries: list[str] = []
    used = 0
    for h in hits:
        section = corpus.section_by_id(h.section_id)
        entry = (f"[{section.title}, p.{section.page_start}-{section.page_end}]\n"
                 f"{_chunk_text(corpus, h.chunk_id)}")
        cost = len(entry) + (2 if entries else 0)
        if used + cost > budget_chars and entries:
            break
        entries.append(entry)
        used += cost
    return "\n\n".join(entries)


def _references_for(corpus: IndexedCorpus,
                    result: RetrievalResult) -> tuple[Reference, ...]:
    refs = []
    for section_id in result.consulted_sections:
        s = corpus.section_by_id(section_id)
        refs.append(Reference(title=s.title, page_start=s.page_start,
                              page_end=s.page_end))
    return tuple(refs)


def answer_query(query: str, corpus: IndexedCorpus, params: RetrievalParams,
                 llm: LlmBackend, fusion_cfg: FusionConfig,
                 iterations: int = 1,
                 context_budget_chars: int = DEFAULT_CONTEXT_BUDGET_CHARS) -> Answer:
    """Retrieve, optionally refine up to twice, then generate the answer with
    its References block data.

    Retrieval count is iterations + 1 unless a refinement round yields no
    hits or an empty follow-up, in which case refinement stops early.
    """
    if not 0 <= iterations <= MAX_REFINEMENT_ITERATIONS:
        raise ValueError("iterations must be 0, 1, or 2")
    retrievals = [retrieve(query, corpus, params, fusion_cfg)]
    refined_queries: list[str] = []
    current_query = query
    for _ in range(iterations):
        hits = list(retrievals[-1].hits)
        if not hits:
            logger.warning("no hits to refine from; stopping refinement")
            break
        refined = refine_query(current_query, hits, corpus, llm)
        if not refined:
            logger.warning("empty refinement reply; skipping further refinement")
            break
        refined_queries.append(refined)
        current_query = compose_refined_query(current_query, refined)
        retrievals.append(retrieve(current_query, corpus, params, fusion_cfg))
    state = RefinementState(q0=query, refined_queries=tuple(refined_queries),
                            final_query=current_query)

    final = retrievals[-1]
    if not final.hits:
        return Answer(text=NO_CONTENT_MESSAGE, references=(),
                      retrievals=tuple(retrievals), refinement=state)
    context = _assemble_context(corpus, final.hits, context_budget_chars)
    reply = llm.complete(LlmRequest(
        system_prompt=prompts.CHAT_SYSTEM_PROMPT,
        user_prompt=prompts.generation_prompt(context, query)))
    return Answer(text=reply.strip(), references=_references_for(corpus, final),
                  retrievals=tuple(retrievals), refinement=state)


def render_answer(answer: Answer) -> str:
    """Answer text plus the structured evidence block: a blank line, then
    "References:" with one "[{title}, Pages {a}-{b}]" line per consulted
    section. Omitted when there are no references."""
    if not answer.references:
        return answer.text
    lines = [f"[{r.title}, Pages {r.page_start}-{r.page_end}]"
             for r in answer.references]
    return answer.text + "\n\nReferences:\n" + "\n".join(lines)


def alternative_queries(query: str, llm: LlmBackend) -> list[str]:
    """Up to 3 alternative search queries, one per non-empty reply line."""
    if not query:
        raise ValueError("query must be non-empty")
    reply = llm.complete(LlmRequest(
        user_prompt=prompts.alternative_queries_prompt(query)))
    lines = [ln.strip() for ln in reply.strip().splitlines() if ln.strip()]
    if not lines:
        logger.warning("alternative-query reply was empty")
        return []
    if len(lines) < 3:
        logger.warning("expected 3 alternative queries, got %d", len(lines))
    return lines[:3]


@dataclass(frozen=True)
class SectionSummary:
    section_id: str
    title: str
    summary: str


@dataclass(frozen=True)
class DocumentSummary:
    mode: str  # brief | detailed
    executive: str
    sections: tuple[SectionSummary, ...] = field(default=())


def summarize_document(corpus: IndexedCorpus, mode: str,
                       llm: LlmBackend) -> DocumentSummary:
    """Executive summary from the section titles plus one summary per section
    (brief: 1500-char sample, detailed: full content). A failing section is
    marked unsummarized and the rest proceed."""
    if mode not in ("brief", "detailed"):
        raise ValueError(f"unknown summary mode {mode!r}")
    titles = ", ".join(s.title for s in corpus.sections)
    executive = llm.complete(LlmRequest(
        system_prompt=prompts.ANALYST_SYSTEM_PROMPT,
        user_prompt=prompts.executive_summary_prompt(titles))).strip()

    summaries: list[SectionSummary] = []
    for section, text in zip(corpus.sections, corpus.section_texts):
        if not text.strip():
            summaries.append(SectionSummary(section.section_id, section.title,
                                            EMPTY_SECTION_MARKER))
            continue
        if mode == "brief":
            prompt = prompts.section_summary_brief_prompt(section.title, text[:1500])
        else:
            prompt = prompts.section_summary_detailed_prompt(section.title, text)
        try:
            reply = llm.complete(LlmRequest(
                system_prompt=prompts.ANALYST_SYSTEM_PROMPT, user_prompt=prompt))
            summaries.append(SectionSummary(section.section_id, section.title,
                                            reply.strip()))
        except Exception as exc:  # noqa: BLE001 - per-section isolation is the contract
            logger.warning("section %s summarization failed: %s",
                           section.section_id, exc)
            summaries.append(SectionSummary(section.section_id, section.title,
                                            UNSUMMARIZED_MARKER))
    return DocumentSummary(mode=mode, executive=executive,
                           sections=tuple(summaries))
