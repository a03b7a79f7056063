"""Training-free document understanding: pseudo-TOC structuring,
dual-embedding indexing, and coarse-to-fine retrieval with attribution."""

from .answer import Answer, answer_query, render_answer
from .chunk_index import ChunkingParams, IndexedCorpus, build_index, load_index, save_index
from .config import EngineConfig, load_config
from .corpus import Chunk, Document, Page, Section, TokenizerSpec, count_tokens, get_tokenizer
from .engine import Engine
from .fusion import DualEmbedding, FusionConfig, cosine, embed_text, fuse
from .pseudo_toc import PseudoTOC, SegmentationParams, build_pseudo_toc
from .retrieval import RetrievalParams, RetrievalResult, retrieve

__version__ = "0.1.0"

__all__ = [
    "Answer", "answer_query", "render_answer",
    "ChunkingParams", "IndexedCorpus", "build_index", "load_index", "save_index",
    "EngineConfig", "load_config",
    "Chunk", "Document", "Page", "Section", "TokenizerSpec",
    "count_tokens", "get_tokenizer",
    "Engine",
    "DualEmbedding", "FusionConfig", "cosine", "embed_text", "fuse",
    "PseudoTOC", "SegmentationParams", "build_pseudo_toc",
    "RetrievalParams", "RetrievalResult", "retrieve",
    "__version__",
]
