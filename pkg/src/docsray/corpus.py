"""Core domain types: documents, pages, sections, chunks, and tokenization.

Everything here is immutable after construction and safe to share across
threads. Re-ingestion produces a new Document rather than mutating one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, NamedTuple

if TYPE_CHECKING:
    from .fusion import DualEmbedding


class Token(NamedTuple):
    text: str
    start: int  # character offset into the source text
    end: int


TokenizeFn = Callable[[str], list[Token]]

_WS_PUNCT_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)
_WS_RE = re.compile(r"\S+")


def _tokenize_ws_punct(text: str) -> list[Token]:
    return [Token(m.group(), m.start(), m.end()) for m in _WS_PUNCT_RE.finditer(text)]


def _tokenize_whitespace(text: str) -> list[Token]:
    return [Token(m.group(), m.start(), m.end()) for m in _WS_RE.finditer(text)]


@dataclass(frozen=True)
class TokenizerSpec:
    """A deterministic token counter with character offsets.

    The counter is configuration: downstream window sizes tolerate different
    token definitions, but an index is only valid under the tokenizer it was
    built with (enforced via fingerprints in the persisted index).
    """

    tokenizer_id: str
    _fn: TokenizeFn = field(repr=False, compare=False)

    def tokenize(self, text: str) -> list[Token]:
        return self._fn(text)

    def count(self, text: str) -> int:
        return len(self._fn(text))


_TOKENIZERS = {
    "ws_punct": TokenizerSpec("ws_punct", _tokenize_ws_punct),
    "whitespace": TokenizerSpec("whitespace", _tokenize_whitespace),
}

DEFAULT_TOKENIZER_ID = "ws_punct"


def get_tokenizer(tokenizer_id: str = DEFAULT_TOKENIZER_ID) -> TokenizerSpec:
    try:
        return _TOKENIZERS[tokenizer_id]
    except KeyError:
        raise ValueError(f"unknown tokenizer {tokenizer_id!r}; "
                         f"available: {sorted(_TOKENIZERS)}") from None


def count_tokens(text: str, spec: TokenizerSpec) -> int:
    """Deterministic non-negative token count of ``text`` under ``spec``."""
    return spec.count(text)


@dataclass(frozen=True)
class Page:
    """One extracted page: merged text plus captions for visual elements."""

    index: int
    text: str
    visual_descriptions: tuple[str, ...] = ()
    ocr_applied: bool = False

    @property
    def full_text(self) -> str:
        """Page text followed by its visual captions, newline-joined."""
        parts = [self.text] + [c for c in self.visual_descriptions if c]
        return "\n".join(p for p in parts if p)


@dataclass(frozen=True)
class Document:
    doc_id: str
    pages: tuple[Page, ...]
    source_kind: str = "plain_text"  # plain_text | paged_layout

    def __post_init__(self) -> None:
        if not self.pages:
            raise ValueError("a Document needs at least one page")
        for i, page in enumerate(self.pages):
            if page.index != i:
                raise ValueError(f"page indices must be 0-based and contiguous "
                                 f"(page {i} has index {page.index})")

    @property
    def n_pages(self) -> int:
        return len(self.pages)

    def page_range_text(self, page_start: int, page_end: int) -> str:
        """Full text of pages ``page_start..page_end`` inclusive."""
        return "\n".join(p.full_text for p in self.pages[page_start:page_end + 1])


@dataclass(frozen=True)
class Section:
    """A pseudo-TOC node covering an inclusive page range.

    Embeddings are attached at index-build time; before that they are None.
    """

    section_id: str
    title: str
    page_start: int
    page_end: int
    title_embedding: DualEmbedding | None = None
    content_embedding: DualEmbedding | None = None

    def __post_init__(self) -> None:
        if self.page_start > self.page_end:
            raise ValueError(f"section {self.section_id}: "
                             f"page_start {self.page_start} > page_end {self.page_end}")

    @property
    def n_pages(self) -> int:
        return self.page_end - self.page_start + 1


@dataclass(frozen=True)
class Chunk:
    """A sliding-window text segment bound to exactly one section.

    ``token_span`` is a half-open (start, end) index pair into the section
    text's token sequence.
    """

    chunk_id: str
    section_id: str
    text: str
    token_span: tuple[int, int]
    embedding: DualEmbedding | None = None


def section_id_for(doc_id: str, section_index: int) -> str:
    return f"{doc_id}/s{section_index}"


def chunk_id_for(doc_id: str, section_index: int, chunk_index: int) -> str:
    return f"{doc_id}/s{section_index}/c{chunk_index}"


def check_partition(sections: list[Section] | tuple[Section, ...], n_pages: int) -> None:
    """Raise if ``sections`` do not exactly cover [0, n_pages-1] without overlap."""
    if not sections:
        raise ValueError("no sections")
    expected = 0
    for s in sections:
        if s.page_start != expected:
            raise ValueError(f"section {s.section_id} starts at {s.page_start}, "
                             f"expected {expected}: gap or overlap")
        expected = s.page_end + 1
    if expected != n_pages:
        raise ValueError(f"sections cover [0, {expected - 1}] but document has "
                         f"{n_pages} pages")
