"""Three-phase TOC generation under the deterministic mock backends."""

import pytest

from docsray.corpus import Document, Page, Section, check_partition
from docsray.fusion import cosine, embed_text
from docsray.providers import MockLlm
from docsray.pseudo_toc import (BoundarySet, SegmentationParams, build_pseudo_toc,
                                generate_titles, initial_segmentation,
                                merge_small_sections, sections_from_boundaries,
                                toc_to_tsv)

from conftest import CountingLlm, ScriptedLlm, make_fusion

POOLS = {
    "A": [f"alpha{i}" for i in range(10)],
    "B": [f"beta{i}" for i in range(10)],
    "C": [f"gamma{i}" for i in range(10)],
}


def topic_page(index: int, pool: str, heading: bool = False) -> Page:
    words = " ".join(POOLS[pool] * 8)
    text = f"p{index} {words}"
    if heading:
        text = f"## Chapter at page {index}\n{text}"
    return Page(index=index, text=text)


def make_doc(n: int, topic_of, headings=(), doc_id="doc") -> Document:
    pages = tuple(topic_page(i, topic_of(i), heading=(i in headings)) for i in range(n))
    return Document(doc_id=doc_id, pages=pages)


def section(i, start, end, title=""):
    return Section(section_id=f"doc/s{i}", title=title, page_start=start, page_end=end)


# -- phase 1 -----------------------------------------------------------------


def test_short_doc_single_chunk_no_calls():
    doc = make_doc(4, lambda i: "A")
    llm = CountingLlm(MockLlm())
    bounds = initial_segmentation(doc, SegmentationParams(), llm)
    assert bounds.boundaries == (0,)
    assert llm.prompts == []


def test_planted_heading_boundary_detected():
    doc = make_doc(20, lambda i: "A", headings={10})
    llm = CountingLlm(MockLlm())
    bounds = initial_segmentation(doc, SegmentationParams(), llm)
    assert bounds.boundaries == (0, 10)
    assert len(llm.prompts) == 3  # ceil(20/5) - 1


def test_low_overlap_boundary_detected():
    doc = make_doc(20, lambda i: "A" if i < 15 else "B")
    bounds = initial_segmentation(doc, SegmentationParams(), MockLlm())
    assert bounds.boundaries == (0, 15)


def test_homogeneous_doc_never_splits():
    doc = make_doc(20, lambda i: "A")
    bounds = initial_segmentation(doc, SegmentationParams(), MockLlm())
    assert bounds.boundaries == (0,)


def test_non_binary_reply_treated_as_continuation(caplog):
    doc = make_doc(10, lambda i: "A")
    llm = ScriptedLlm(["maybe?"])
    with caplog.at_level("WARNING"):
        bounds = initial_segmentation(doc, SegmentationParams(), llm)
    assert bounds.boundaries == (0,)
    assert any("not 0/1" in rec.message for rec in caplog.records)


def test_call_budget_formula():
    params = SegmentationParams()
    for n in (1, 4, 5, 6, 14, 15, 23):
        doc = make_doc(n, lambda i: "A")
        llm = CountingLlm(MockLlm())
        initial_segmentation(doc, params, llm)
        expected = max(0, -(-n // params.k) - 1)
        assert len(llm.prompts) == expected, f"n={n}"


def test_boundary_set_invariants():
    with pytest.raises(ValueError):
        BoundarySet(boundaries=(5,))
    with pytest.raises(ValueError):
        BoundarySet(boundaries=(0, 5, 5))


# -- phase 2 -----------------------------------------------------------------


def test_merge_forced_into_only_neighbor():
    doc = make_doc(10, lambda i: "A")
    sections = [section(0, 0, 1), section(1, 2, 9)]
    merged = merge_small_sections(doc, sections, SegmentationParams(m=3), make_fusion())
    assert [(s.page_start, s.page_end) for s in merged] == [(0, 9)]


def test_merge_follows_similarity():
    # pages 0-4 pool A, 5-6 pool A (the undersized middle), 7-11 pool B
    doc = make_doc(12, lambda i: "A" if i < 7 else "B")
    sections = [section(0, 0, 4), section(1, 5, 6), section(2, 7, 11)]
    fusion = make_fusion()

    # oracle: the middle's cosine to the left neighbor must exceed the right
    mid = embed_text(doc.page_range_text(5, 6), fusion)
    left = embed_text(doc.page_range_text(0, 4), fusion)
    right = embed_text(doc.page_range_text(7, 11), fusion)
    assert cosine(mid, left) > cosine(mid, right)

    merged = merge_small_sections(doc, sections, SegmentationParams(m=3), fusion)
    assert [(s.page_start, s.page_end) for s in merged] == [(0, 6), (7, 11)]


def test_merge_prefers_next_on_tie_or_higher():
    # middle shares pool B with the right neighbor
    doc = make_doc(12, lambda i: "A" if i < 5 else "B")
    sections = [section(0, 0, 4), section(1, 5, 6), section(2, 7, 11)]
    merged = merge_small_sections(doc, sections, SegmentationParams(m=3), make_fusion())
    assert [(s.page_start, s.page_end) for s in merged] == [(0, 4), (5, 11)]


def test_merge_leaves_adequate_sections_alone():
    doc = make_doc(15, lambda i: "A")
    sections = [section(0, 0, 3), section(1, 4, 8), section(2, 9, 14)]
    merged = merge_small_sections(doc, sections, SegmentationParams(m=3), make_fusion())
    assert [(s.page_start, s.page_end) for s in merged] == [(0, 3), (4, 8), (9, 14)]


def test_single_undersized_section_left_as_is():
    doc = make_doc(2, lambda i: "A")
    sections = [section(0, 0, 1)]
    merged = merge_small_sections(doc, sections, SegmentationParams(m=3), make_fusion())
    assert [(s.page_start, s.page_end) for s in merged] == [(0, 1)]


def test_merge_runs_to_fixpoint():
    # 1-page fragments must collapse until nothing is under m, even when the
    # single left-to-right pass would leave residue.
    doc = make_doc(6, lambda i: "A")
    sections = [section(i, i, i) for i in range(6)]
    merged = merge_small_sections(doc, sections, SegmentationParams(m=3), make_fusion())
    check_partition(merged, 6)
    assert all(s.n_pages >= 3 for s in merged)


# -- phase 3 -----------------------------------------------------------------


def test_title_from_first_line():
    doc = Document(doc_id="doc", pages=(
        Page(index=0, text="Financial Overview\nrevenue grew in every region"),))
    out = generate_titles(doc, [section(0, 0, 0)], MockLlm())
    assert out[0].title == "Financial Overview"


def test_title_fallback_for_empty_section():
    doc = Document(doc_id="doc", pages=(Page(index=0, text=""),))
    out = generate_titles(doc, [section(0, 0, 0)], MockLlm())
    assert out[0].title == "Section 1 (pages 0–0)"


def test_titles_distinct_across_sections():
    doc = Document(doc_id="doc", pages=(
        Page(index=0, text="Mergers And Acquisitions\nbody"),
        Page(index=1, text="Cell Biology Primer\nbody"),
        Page(index=2, text="Networking Hardware Guide\nbody"),
    ))
    sections = [section(i, i, i) for i in range(3)]
    out = generate_titles(doc, sections, MockLlm())
    titles = [s.title for s in out]
    assert titles == ["Mergers And Acquisitions", "Cell Biology Primer",
                      "Networking Hardware Guide"]
    assert len(set(titles)) == 3


def test_blank_reply_falls_back(caplog):
    doc = Document(doc_id="doc", pages=(Page(index=0, text="some body text"),))
    with caplog.at_level("WARNING"):
        out = generate_titles(doc, [section(0, 0, 0)], ScriptedLlm(["   \n  "]))
    assert out[0].title.startswith("Section 1")


# -- full pipeline -------------------------------------------------------------


def test_single_page_document():
    doc = make_doc(1, lambda i: "A")
    toc = build_pseudo_toc(doc, SegmentationParams(), MockLlm(), make_fusion())
    assert len(toc.sections) == 1
    assert (toc.sections[0].page_start, toc.sections[0].page_end) == (0, 0)
    assert toc.sections[0].title


def test_planted_boundary_end_to_end():
    doc = make_doc(20, lambda i: "A", headings={10})
    toc = build_pseudo_toc(doc, SegmentationParams(), MockLlm(), make_fusion())
    spans = [(s.page_start, s.page_end) for s in toc.sections]
    assert spans == [(0, 9), (10, 19)]
    assert all(s.title for s in toc.sections)
    assert toc.sections[0].section_id == "doc/s0"


def test_merge_end_to_end_prefers_similar_first_section():
    # Boundaries plant at 10 (heading, same pool) and 15 (pool change).
    # With m=6 the 5-page middle is undersized and merges into the first
    # section, whose vocabulary it shares.
    doc = make_doc(25, lambda i: "A" if i < 15 else "B", headings={10})
    params = SegmentationParams(m=6)
    bounds = initial_segmentation(doc, params, MockLlm())
    assert bounds.boundaries == (0, 10, 15)
    toc = build_pseudo_toc(doc, params, MockLlm(), make_fusion())
    spans = [(s.page_start, s.page_end) for s in toc.sections]
    assert spans == [(0, 14), (15, 24)]


def test_partition_invariant_at_every_phase():
    doc = make_doc(23, lambda i: "A" if i < 10 else ("B" if i < 15 else "C"))
    params = SegmentationParams()
    bounds = initial_segmentation(doc, params, MockLlm())
    phase1 = sections_from_boundaries(doc, bounds)
    check_partition(phase1, doc.n_pages)
    phase2 = merge_small_sections(doc, phase1, params, make_fusion())
    check_partition(phase2, doc.n_pages)
    assert len(phase2) <= len(phase1)
    phase3 = generate_titles(doc, phase2, MockLlm())
    check_partition(phase3, doc.n_pages)


def test_deterministic_under_mocks():
    doc = make_doc(20, lambda i: "A" if i < 10 else "B")
    params = SegmentationParams()
    a = build_pseudo_toc(doc, params, MockLlm(), make_fusion())
    b = build_pseudo_toc(doc, params, MockLlm(), make_fusion())
    assert a.sections == b.sections


def test_toc_tsv_export():
    doc = make_doc(20, lambda i: "A", headings={10})
    toc = build_pseudo_toc(doc, SegmentationParams(), MockLlm(), make_fusion())
    tsv = toc_to_tsv(toc)
    lines = tsv.strip().splitlines()
    assert lines[0] == "section_id\ttitle\tpage_start\tpage_end"
    assert len(lines) == 1 + len(toc.sections)
    assert lines[1].startswith("doc/s0\t")


def test_params_validation():
    with pytest.raises(ValueError):
        SegmentationParams(k=0)
    with pytest.raises(ValueError):
        SegmentationParams(m=20, max_pages=15)
