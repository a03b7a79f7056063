"""Answer generation: refinement loop, attribution, alternatives, summaries,
and the evidence-block rendering."""

from pathlib import Path

import pytest

from docsray.answer import (EMPTY_SECTION_MARKER, NO_CONTENT_MESSAGE,
                            UNSUMMARIZED_MARKER, Answer, RefinementState, Reference,
                            alternative_queries, answer_query, compose_refined_query,
                            refine_query, render_answer, summarize_document)
from docsray.chunk_index import IndexedCorpus
from docsray.corpus import Section
from docsray.errors import BackendError
from docsray.providers import LlmBackend, LlmRequest, MockLlm
from docsray.retrieval import RetrievalParams, retrieve

from conftest import CountingLlm, ScriptedLlm, build_synthetic_corpus, make_fusion

GOLDEN = Path(__file__).parent / "data" / "golden"


def simple_corpus(fusion=None):
    return build_synthetic_corpus([
        ("Financial Overview", ["revenue grew strongly in asia",
                                "operating margin improved year over year"]),
        ("Research Pipeline", ["three new compounds entered trials",
                               "laboratory staffing doubled in spring"]),
    ], fusion=fusion)


# -- refine / compose ----------------------------------------------------------


def test_refine_query_uses_mock_contract():
    fusion = make_fusion(64, 64)  # wide buckets so token overlap drives the top hit
    corpus = simple_corpus(fusion)
    result = retrieve("revenue", corpus, RetrievalParams(k2=1), fusion)
    refined = refine_query("revenue", list(result.hits), corpus, MockLlm())
    # contract: "more about " + 3 rarest tokens of query+context, ties
    # lexicographic; all tokens here are unique so the 3 alphabetically
    # first of {revenue, grew, strongly, in, asia} win.
    assert refined == "more about asia grew in"


def test_refine_query_requires_hits():
    corpus = simple_corpus()
    with pytest.raises(ValueError):
        refine_query("q", [], corpus, MockLlm())


def test_refine_reply_trimmed_to_single_line():
    fusion = make_fusion()
    corpus = simple_corpus(fusion)
    result = retrieve("revenue", corpus, RetrievalParams(k2=1), fusion)
    llm = ScriptedLlm(["  \n  What about margins?  \nextra commentary"])
    assert refine_query("revenue", list(result.hits), corpus, llm) == "What about margins?"


def test_compose_examples():
    assert compose_refined_query("Revenue growth in Asia", "Asian market metrics") \
        == "Revenue growth in Asia: Asian market metrics"
    assert compose_refined_query("a", "b") == "a: b"
    two = compose_refined_query(compose_refined_query("q0", "r1"), "r2")
    assert two == "q0: r1: r2"
    with pytest.raises(ValueError):
        compose_refined_query("", "x")


def test_refinement_state_caps_iterations():
    with pytest.raises(ValueError):
        RefinementState(q0="q", refined_queries=("a", "b", "c"), final_query="f")


# -- answer_query ----------------------------------------------------------------


def test_zero_iterations_single_retrieval():
    fusion = make_fusion()
    corpus = simple_corpus(fusion)
    answer = answer_query("revenue in asia", corpus, RetrievalParams(), MockLlm(),
                          fusion, iterations=0)
    assert len(answer.retrievals) == 1
    assert answer.refinement.final_query == "revenue in asia"
    assert answer.refinement.refined_queries == ()
    assert answer.text


def test_two_iterations_three_retrievals_two_refinements():
    fusion = make_fusion()
    corpus = simple_corpus(fusion)
    llm = CountingLlm(MockLlm())
    answer = answer_query("revenue in asia", corpus, RetrievalParams(), llm,
                          fusion, iterations=2)
    assert len(answer.retrievals) == 3
    refinement_calls = [p for p in llm.prompts if "follow-up question" in p]
    assert len(refinement_calls) == 2
    assert len(answer.refinement.refined_queries) == 2
    q0 = "revenue in asia"
    r1, r2 = answer.refinement.refined_queries
    assert answer.refinement.final_query == f"{q0}: {r1}: {r2}"
    assert answer.refinement.final_query.startswith(q0)


def test_iterations_out_of_range_rejected():
    corpus = simple_corpus()
    with pytest.raises(ValueError):
        answer_query("q", corpus, RetrievalParams(), MockLlm(), make_fusion(),
                     iterations=3)


def test_attribution_single_section_fixture():
    fusion = make_fusion()
    base = build_synthetic_corpus(
        [("Financial Overview", ["all hits come from this very section",
                                 "second chunk of the same section"])],
        fusion=fusion)
    # re-home the section onto pages 3-5
    section = Section(section_id=base.sections[0].section_id, title="Financial Overview",
                      page_start=3, page_end=5,
                      title_embedding=base.sections[0].title_embedding,
                      content_embedding=base.sections[0].content_embedding)
    corpus = IndexedCorpus(doc_id=base.doc_id, n_pages=6, source_kind="plain_text",
                           sections=(section,), section_texts=base.section_texts,
                           chunks=base.chunks, fingerprints=base.fingerprints)
    answer = answer_query("hits from section", corpus, RetrievalParams(), MockLlm(),
                          fusion, iterations=0)
    assert answer.references == (Reference("Financial Overview", 3, 5),)


def test_references_cover_consulted_sections_exactly():
    fusion = make_fusion()
    corpus = simple_corpus(fusion)
    answer = answer_query("revenue compounds trials", corpus, RetrievalParams(),
                          MockLlm(), fusion, iterations=1)
    final = answer.final_retrieval
    by_id = {s.section_id: s for s in corpus.sections}
    expected = tuple(Reference(by_id[sid].title, by_id[sid].page_start,
                               by_id[sid].page_end)
                     for sid in final.consulted_sections)
    assert answer.references == expected
    assert len({(r.title, r.page_start, r.page_end) for r in answer.references}) \
        == len(answer.references)


def test_zero_hits_yields_no_content_answer():
    fusion = make_fusion()
    base = build_synthetic_corpus([("Lone Title", ["placeholder"])], fusion=fusion)
    corpus = IndexedCorpus(doc_id=base.doc_id, n_pages=base.n_pages,
                           source_kind=base.source_kind, sections=base.sections,
                           section_texts=base.section_texts, chunks=(),
                           fingerprints=base.fingerprints)
    answer = answer_query("anything", corpus, RetrievalParams(), MockLlm(),
                          fusion, iterations=1)
    assert answer.text == NO_CONTENT_MESSAGE
    assert answer.references == ()
    assert len(answer.retrievals) == 1  # nothing to refine from


def test_empty_refinement_reply_stops_early():
    fusion = make_fusion()
    corpus = simple_corpus(fusion)
    # first reply empty -> skip; generation prompt still needs one reply
    llm = ScriptedLlm(["", "generated answer text"])
    answer = answer_query("revenue", corpus, RetrievalParams(), llm, fusion,
                          iterations=2)
    assert len(answer.retrievals) == 1
    assert answer.refinement.refined_queries == ()
    assert answer.refinement.final_query == "revenue"


def test_context_budget_limits_entries():
    fusion = make_fusion()
    corpus = simple_corpus(fusion)
    llm = CountingLlm(MockLlm())
    answer_query("revenue asia margin", corpus, RetrievalParams(), llm, fusion,
                 iterations=0, context_budget_chars=120)
    generation_prompt = [p for p in llm.prompts if "Question:" in p][0]
    # only one bracketed context entry fits in 120 chars
    assert generation_prompt.count("[Financial Overview") + \
        generation_prompt.count("[Research Pipeline") == 1


# -- rendering ---------------------------------------------------------------------


def test_render_answer_matches_golden():
    answer = Answer(
        text="Three contributions are presented in the report.",
        references=(Reference("Introduction", 0, 2), Reference("Results", 3, 5)),
        retrievals=(), refinement=RefinementState(q0="q", final_query="q"))
    rendered = render_answer(answer)
    assert rendered + "\n" == (GOLDEN / "answer_render.txt").read_text(encoding="utf-8")


def test_render_answer_without_references_has_no_block():
    answer = Answer(text=NO_CONTENT_MESSAGE, references=(), retrievals=(),
                    refinement=RefinementState(q0="q", final_query="q"))
    assert render_answer(answer) == NO_CONTENT_MESSAGE


# -- alternatives -------------------------------------------------------------------


def test_alternative_queries_three_lines():
    assert alternative_queries("revenue growth", MockLlm()) == [
        "revenue growth overview", "revenue growth background",
        "revenue growth details"]


def test_alternative_queries_clipped_to_three():
    llm = ScriptedLlm(["q1\nq2\nq3\nq4\nq5"])
    assert alternative_queries("x", llm) == ["q1", "q2", "q3"]


def test_alternative_queries_empty_reply(caplog):
    llm = ScriptedLlm([""])
    with caplog.at_level("WARNING"):
        assert alternative_queries("x", llm) == []
    assert any("empty" in rec.message for rec in caplog.records)


# -- summaries ----------------------------------------------------------------------


def test_brief_summary_structure():
    corpus = simple_corpus()
    summary = summarize_document(corpus, "brief", MockLlm())
    assert summary.mode == "brief"
    assert "Financial Overview" in summary.executive
    assert [s.title for s in summary.sections] == ["Financial Overview",
                                                   "Research Pipeline"]
    assert summary.sections[0].summary == 'Summary of "Financial Overview".'


def test_detailed_vs_brief_prompts_differ():
    corpus = simple_corpus()
    brief_llm = CountingLlm(MockLlm())
    detailed_llm = CountingLlm(MockLlm())
    brief = summarize_document(corpus, "brief", brief_llm)
    detailed = summarize_document(corpus, "detailed", detailed_llm)
    assert [s.section_id for s in brief.sections] == \
        [s.section_id for s in detailed.sections]
    assert any("in 2-3 sentences" in p for p in brief_llm.prompts)
    assert any("Summary (2-3 paragraphs):" in p for p in detailed_llm.prompts)
    assert not any("Summary (2-3 paragraphs):" in p for p in brief_llm.prompts)


def test_empty_section_marked():
    base = simple_corpus()
    corpus = IndexedCorpus(doc_id=base.doc_id, n_pages=base.n_pages,
                           source_kind=base.source_kind, sections=base.sections,
                           section_texts=("", base.section_texts[1]),
                           chunks=base.chunks, fingerprints=base.fingerprints)
    summary = summarize_document(corpus, "brief", MockLlm())
    assert summary.sections[0].summary == EMPTY_SECTION_MARKER
    assert summary.sections[1].summary.startswith("Summary of")


class FailOnSectionLlm(LlmBackend):
    """Executive call succeeds; the first section summary raises."""

    backend_id = "fail-llm"
    supports_vision = True

    def __init__(self):
        self.calls = 0

    def complete(self, request: LlmRequest) -> str:
        self.calls += 1
        if "Summarize this section" in request.user_prompt and self.calls == 2:
            raise BackendError("backend fell over")
        return "fine"


def test_failed_section_marked_unsummarized_others_proceed():
    corpus = simple_corpus()
    summary = summarize_document(corpus, "brief", FailOnSectionLlm())
    assert summary.sections[0].summary == UNSUMMARIZED_MARKER
    assert summary.sections[1].summary == "fine"


def test_summarize_rejects_unknown_mode():
    with pytest.raises(ValueError):
        summarize_document(simple_corpus(), "verbose", MockLlm())
