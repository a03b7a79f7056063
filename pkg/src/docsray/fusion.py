"""Dual-embedding fusion: concatenate-then-normalize (default) or addition.

Source vectors are NOT individually normalized before fusing; only the fused
vector is normalized. Relative model magnitudes therefore influence rankings,
which is the intended behavior; per-model pre-normalization is an opt-in flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .providers import EmbedderBackend

CONCAT = "concat"
ADD = "add"
FUSION_MODES = (CONCAT, ADD)

NORM_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class DualEmbedding:
    """A fused vector from two embedder backends.

    Freshly fused vectors are unit-norm; section content means (averages of
    chunk embeddings) are carried in this type too and are deliberately not
    re-normalized, so do not assume unit norm for every instance.
    """

    values: np.ndarray
    fusion_mode: str

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DualEmbedding):
            return NotImplemented
        return self.fusion_mode == other.fusion_mode and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class FusionConfig:
    backend_a: EmbedderBackend
    backend_b: EmbedderBackend
    mode: str = CONCAT
    pre_normalize: bool = False  # normalize each model's output before fusing

    def __post_init__(self) -> None:
        if self.mode not in FUSION_MODES:
            raise ValueError(f"unknown fusion mode {self.mode!r}")
        if self.mode == ADD and self.backend_a.output_dim != self.backend_b.output_dim:
            raise ValueError("add fusion requires equal embedder dimensions "
                             f"({self.backend_a.output_dim} != {self.backend_b.output_dim})")

    @property
    def output_dim(self) -> int:
        if self.mode == CONCAT:
            return self.backend_a.output_dim + self.backend_b.output_dim
        return self.backend_a.output_dim


def fuse(e1: np.ndarray, e2: np.ndarray, mode: str = CONCAT) -> DualEmbedding:
    """Fuse two raw embedding vectors into one unit-norm DualEmbedding."""
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.size == 0 or b.size == 0:
        raise ValueError("fuse expects two non-empty 1-D vectors")
    if mode == CONCAT:
        combined = np.concatenate([a, b])
    elif mode == ADD:
        if a.shape != b.shape:
            raise ValueError(f"add fusion requires equal dimensions "
                             f"({a.shape[0]} != {b.shape[0]})")
        combined = a + b
    else:
        raise ValueError(f"unknown fusion mode {mode!r}")
    norm = float(np.linalg.norm(combined))
    if norm == 0.0:
        raise ValueError("cannot fuse all-zero embeddings: norm undefined")
    return DualEmbedding(values=combined / norm, fusion_mode=mode)


def cosine(a: DualEmbedding, b: DualEmbedding) -> float:
    """Cosine similarity in [-1, 1].

    Divides by both norms so un-normalized content means score correctly;
    for unit vectors this reduces to the plain dot product.
    """
    if a.fusion_mode != b.fusion_mode:
        raise ValueError(f"fusion mode mismatch: {a.fusion_mode} vs {b.fusion_mode}")
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    va = a.values.astype(np.float64, copy=False)
    vb = b.values.astype(np.float64, copy=False)
    denom = float(np.linalg.norm(va)) * float(np.linalg.norm(vb))
    if denom == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.clip(np.dot(va, vb) / denom, -1.0, 1.0))


def embed_text(text: str, cfg: FusionConfig) -> DualEmbedding:
    """Embed ``text`` with both backends and fuse per ``cfg``."""
    if not text:
        raise ValueError("cannot embed empty text")
    e1 = cfg.backend_a.embed(text)
    e2 = cfg.backend_b.embed(text)
    if cfg.pre_normalize:
        e1 = e1 / np.linalg.norm(e1)
        e2 = e2 / np.linalg.norm(e2)
    return fuse(e1, e2, cfg.mode)
