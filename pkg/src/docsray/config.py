"""Engine configuration: defaults, YAML loading, and backend construction.

Environment variables override backend endpoints and tokens so deployments
never need credentials in the config file:

    DOCSRAY_LLM_BASE_URL, DOCSRAY_LLM_MODEL,
    DOCSRAY_EMBED_A_BASE_URL, DOCSRAY_EMBED_A_MODEL,
    DOCSRAY_EMBED_B_BASE_URL, DOCSRAY_EMBED_B_MODEL
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .chunk_index import ChunkingParams
from .corpus import DEFAULT_TOKENIZER_ID, TokenizerSpec, get_tokenizer
from .fusion import CONCAT, FusionConfig
from .providers import (EmbedderBackend, HttpEmbedder, HttpEndpoint, HttpLlm,
                        LlmBackend, MockEmbedder, MockLlm, SamplingParams)
from .pseudo_toc import SegmentationParams
from .retrieval import RetrievalParams


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"  # mock | http
    base_url: str = ""
    model: str = ""
    auth_env: str = ""
    timeout_s: float = 60.0
    output_dim: int = 32      # embedders only
    supports_vision: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("mock", "http"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "http" and not self.base_url:
            raise ValueError("http backend requires a base URL")


@dataclass(frozen=True)
class EngineConfig:
    chunking: ChunkingParams = field(default_factory=ChunkingParams)
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    retrieval: RetrievalParams = field(default_factory=RetrievalParams)
    sampling: SamplingParams = field(default_factory=SamplingParams)
    fusion_mode: str = CONCAT
    tokenizer_id: str = DEFAULT_TOKENIZER_ID
    llm: BackendConfig = field(default_factory=BackendConfig)
    embedder_a: BackendConfig = field(default_factory=lambda: BackendConfig(model="mock-a"))
    embedder_b: BackendConfig = field(default_factory=lambda: BackendConfig(model="mock-b"))
    refinement_iterations: int = 1
    context_budget_chars: int = 8000
    normalize_content_means: bool = False  # re-normalize section mean vectors

    def __post_init__(self) -> None:
        if not 0 <= self.refinement_iterations <= 2:
            raise ValueError("refinement_iterations must be 0, 1, or 2")


def _env(name: str, default: str) -> str:
    return os.environ.get(name, "") or default


def _backend_from_dict(data: dict, defaults: BackendConfig) -> BackendConfig:
    return replace(defaults, **{k: v for k, v in data.items()
                                if k in BackendConfig.__dataclass_fields__})


def load_config(path: str | Path | None = None) -> EngineConfig:
    """Build an EngineConfig from a YAML file (all keys optional) and apply
    environment overrides."""
    data: dict = {}
    if path is not None:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if raw is not None:
            if not isinstance(raw, dict):
                raise ValueError(f"config {path} must be a mapping")
            data = raw

    chunking = ChunkingParams(**data.get("chunking", {}))
    segmentation = SegmentationParams(**data.get("segmentation", {}))
    retrieval = RetrievalParams(**data.get("retrieval", {}))
    sampling = SamplingParams(**data.get("sampling", {}))

    llm = _backend_from_dict(data.get("llm", {}), BackendConfig())
    emb_a = _backend_from_dict(data.get("embedder_a", {}), BackendConfig(model="mock-a"))
    emb_b = _backend_from_dict(data.get("embedder_b", {}), BackendConfig(model="mock-b"))

    llm = replace(llm,
                  base_url=_env("DOCSRAY_LLM_BASE_URL", llm.base_url),
                  model=_env("DOCSRAY_LLM_MODEL", llm.model))
    emb_a = replace(emb_a,
                    base_url=_env("DOCSRAY_EMBED_A_BASE_URL", emb_a.base_url),
                    model=_env("DOCSRAY_EMBED_A_MODEL", emb_a.model))
    emb_b = replace(emb_b,
                    base_url=_env("DOCSRAY_EMBED_B_BASE_URL", emb_b.base_url),
                    model=_env("DOCSRAY_EMBED_B_MODEL", emb_b.model))

    return EngineConfig(
        chunking=chunking, segmentation=segmentation, retrieval=retrieval,
        sampling=sampling,
        fusion_mode=data.get("fusion_mode", CONCAT),
        tokenizer_id=data.get("tokenizer_id", DEFAULT_TOKENIZER_ID),
        llm=llm, embedder_a=emb_a, embedder_b=emb_b,
        refinement_iterations=data.get("refinement_iterations", 1),
        context_budget_chars=data.get("context_budget_chars", 8000),
        normalize_content_means=data.get("normalize_content_means", False),
    )


def build_llm(cfg: BackendConfig,
              sampling: SamplingParams = SamplingParams()) -> LlmBackend:
    if cfg.kind == "mock":
        return MockLlm(supports_vision=cfg.supports_vision)
    endpoint = HttpEndpoint(base_url=cfg.base_url, model=cfg.model,
                            auth_env=cfg.auth_env or None, timeout_s=cfg.timeout_s)
    return HttpLlm(endpoint, supports_vision=cfg.supports_vision, sampling=sampling)


def build_embedder(cfg: BackendConfig) -> EmbedderBackend:
    if cfg.kind == "mock":
        return MockEmbedder(output_dim=cfg.output_dim,
                            backend_id=f"mock-embedder:{cfg.model or 'default'}")
    endpoint = HttpEndpoint(base_url=cfg.base_url, model=cfg.model,
                            auth_env=cfg.auth_env or None, timeout_s=cfg.timeout_s)
    return HttpEmbedder(endpoint, output_dim=cfg.output_dim)


def build_fusion(config: EngineConfig) -> FusionConfig:
    return FusionConfig(backend_a=build_embedder(config.embedder_a),
                        backend_b=build_embedder(config.embedder_b),
                        mode=config.fusion_mode)


def build_tokenizer(config: EngineConfig) -> TokenizerSpec:
    return get_tokenizer(config.tokenizer_id)
