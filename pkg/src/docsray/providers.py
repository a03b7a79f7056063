"""LLM and embedder backends: deterministic offline mocks and HTTP clients.

The mock backends are rule-driven pure functions of their input, documented
below as contracts, so the whole pipeline is reproducible without any model.
The HTTP backends speak the OpenAI-compatible chat-completions / embeddings
wire protocol reachable by local inference servers.
"""

from __future__ import annotations

import base64
import hashlib
import logging
import os
import re
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import requests

from .errors import BackendError, CapabilityError, TransportError

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.7
DEFAULT_TOP_P = 0.95
DEFAULT_REPEAT_PENALTY = 1.1

TRANSPORT_RETRIES = 3


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P
    repeat_penalty: float = DEFAULT_REPEAT_PENALTY


@dataclass(frozen=True)
class ImagePayload:
    """Base64 image payload with a media-type tag."""

    media_type: str
    data_b64: str

    @classmethod
    def from_bytes(cls, data: bytes, media_type: str = "application/octet-stream") -> "ImagePayload":
        return cls(media_type=media_type, data_b64=base64.b64encode(data).decode("ascii"))


@dataclass(frozen=True)
class LlmRequest:
    user_prompt: str
    system_prompt: str | None = None
    images: tuple[ImagePayload, ...] = ()
    sampling: SamplingParams = field(default_factory=SamplingParams)

    def __post_init__(self) -> None:
        if not self.user_prompt:
            raise ValueError("user_prompt must be non-empty")


class LlmBackend:
    """Interface for completion backends."""

    backend_id: str = "llm"
    supports_vision: bool = False

    def complete(self, request: LlmRequest) -> str:
        raise NotImplementedError

    def _check_vision(self, request: LlmRequest) -> None:
        if request.images and not self.supports_vision:
            raise CapabilityError(f"backend {self.backend_id} cannot process images")


class EmbedderBackend:
    """Interface for embedding backends. ``output_dim`` is fixed per backend."""

    backend_id: str = "embedder"
    output_dim: int = 0

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def _check_text(self, text: str) -> None:
        if not text:
            raise ValueError(f"backend {self.backend_id}: cannot embed empty text")


# --------------------------------------------------------------------------
# Deterministic mocks
# --------------------------------------------------------------------------

_BOUNDARY_RE = re.compile(r"\[Page A\]\n(.*?)\n\n\[Page B\]\n(.*)\Z", re.S)
_TITLE_RE = re.compile(r"main topic\.\n\n(.*?)\n\nReturn ONLY the title text", re.S)
_REFINE_RE = re.compile(
    r"The user question is: (.*?)\n\nThe retrieved chunks are:\n(.*?)"
    r"\n\nWrite ONE concise follow-up question", re.S)
_ALTQ_RE = re.compile(r'Given the search query: "(.*?)"\n', re.S)
_MULTI_VISUAL_RE = re.compile(r"Describe these (\d+) visual elements")
_EXEC_RE = re.compile(r"Based on a document with these sections: (.*?)\n\n", re.S)
_BRIEF_RE = re.compile(r'Summarize this section "(.*?)" in 2-3 sentences:', re.S)
_DETAILED_RE = re.compile(r'from section "(.*?)", provide a concise summary', re.S)
_GENERATION_RE = re.compile(r"\n\nQuestion: (.*?)\n\nAnswer:\Z", re.S)


def _jaccard(a: str, b: str) -> float:
    sa = set(a.lower().split())
    sb = set(b.lower().split())
    union = sa | sb
    if not union:
        return 1.0
    return len(sa & sb) / len(union)


class MockLlm(LlmBackend):
    """Rule-driven completion mock; a pure function of the prompt text.

    Contracts (the tests depend on these exactly):

    * boundary prompt -> "1" iff the Page B excerpt's first line starts with
      "## ", or the token Jaccard overlap between the two excerpts is < 0.2;
      otherwise "0".
    * title prompt -> first non-empty line of the sampled passage, truncated
      to 8 whitespace tokens.
    * refinement prompt -> "more about " + the 3 rarest tokens of
      query+context joined by spaces (ties broken lexicographically).
    * alternative-queries prompt -> 3 lines derived from the query.
    * visual prompts -> fixed caption, or "Figure i: ..." lines for the
      multi-image form.
    * OCR prompt -> fixed recovered-text marker.
    * summary prompts -> deterministic one-liners echoing the parsed slots.
    * RAG generation prompt -> deterministic line naming the context size.
    * anything else -> "OK".
    """

    backend_id = "mock-llm"

    def __init__(self, supports_vision: bool = True) -> None:
        self.supports_vision = supports_vision

    def complete(self, request: LlmRequest) -> str:
        self._check_vision(request)
        prompt = request.user_prompt

        m = _BOUNDARY_RE.search(prompt)
        if m and "[Page A]" in prompt:
            return self._boundary(m.group(1), m.group(2))
        m = _TITLE_RE.search(prompt)
        if m:
            return self._title(m.group(1))
        m = _REFINE_RE.search(prompt)
        if m:
            return self._refine(m.group(1), m.group(2))
        m = _ALTQ_RE.search(prompt)
        if m:
            q = m.group(1)
            return "\n".join([f"{q} overview", f"{q} background", f"{q} details"])
        m = _MULTI_VISUAL_RE.search(prompt)
        if m:
            n = int(m.group(1))
            return "\n".join(f"Figure {i}: visual element {i}" for i in range(1, n + 1))
        if prompt.startswith("Describe this visual content."):
            return "A chart or illustration from the document."
        if prompt.startswith("Extract text from this image"):
            return "Recovered text from a scanned page."
        m = _EXEC_RE.search(prompt)
        if m:
            return f"This document covers: {m.group(1)}."
        m = _BRIEF_RE.search(prompt)
        if m:
            return f'Summary of "{m.group(1)}".'
        m = _DETAILED_RE.search(prompt)
        if m:
            return f'Detailed summary of "{m.group(1)}".'
        m = _GENERATION_RE.search(prompt)
        if m:
            n_passages = len(re.findall(r"(?m)^\[.*p\.\d+-\d+\]$", prompt))
            return f"Based on {n_passages} retrieved passages: {m.group(1).strip()}"
        return "OK"

    @staticmethod
    def _boundary(excerpt_a: str, excerpt_b: str) -> str:
        first_line = excerpt_b.splitlines()[0] if excerpt_b.splitlines() else ""
        if first_line.startswith("## "):
            return "1"
        if _jaccard(excerpt_a, excerpt_b) < 0.2:
            return "1"
        return "0"

    @staticmethod
    def _title(passage: str) -> str:
        for line in passage.splitlines():
            if line.strip():
                return " ".join(line.strip().split()[:8])
        return ""

    @staticmethod
    def _refine(query: str, context: str) -> str:
        tokens = (query + " " + context).split()
        counts = Counter(tokens)
        rarest = sorted(counts, key=lambda t: (counts[t], t))[:3]
        return "more about " + " ".join(rarest)


class MockEmbedder(EmbedderBackend):
    """Hash-bucket embedder: each whitespace token adds weight 1 to the
    bucket md5(token) % output_dim; the vector is then L2-normalized.

    Texts sharing more tokens get higher cosine similarity, and equal inputs
    produce bit-equal output across runs and platforms.
    """

    def __init__(self, output_dim: int = 32, backend_id: str = "mock-embedder") -> None:
        if output_dim <= 0:
            raise ValueError("output_dim must be positive")
        self.output_dim = output_dim
        self.backend_id = backend_id

    def embed(self, text: str) -> np.ndarray:
        self._check_text(text)
        vec = np.zeros(self.output_dim, dtype=np.float64)
        for token in text.split():
            digest = hashlib.md5(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.output_dim
            vec[bucket] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # Happens only for whitespace-free punctuation-less empty splits;
            # treated as an un-embeddable input.
            raise ValueError(f"backend {self.backend_id}: text has no tokens")
        return vec / norm


# --------------------------------------------------------------------------
# OpenAI-compatible HTTP backends
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HttpEndpoint:
    base_url: str
    model: str
    auth_env: str | None = None
    timeout_s: float = 60.0

    def __post_init__(self) -> None:
        if not self.base_url:
            raise ValueError("http backend requires a non-empty base URL")

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env, "")
            if token:
                headers["Authorization"] = f"Bearer {token}"
        return headers


def _post_with_retries(url: str, payload: dict, headers: dict[str, str],
                       timeout_s: float, retry_wait_s: float = 1.0) -> dict:
    last_error: Exception | None = None
    for attempt in range(1, TRANSPORT_RETRIES + 1):
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=timeout_s)
            if resp.status_code >= 500:
                raise requests.RequestException(f"server error {resp.status_code}")
            if resp.status_code >= 400:
                raise BackendError(f"{url} rejected the request: "
                                   f"{resp.status_code} {resp.text[:500]}")
            return resp.json()
        except BackendError:
            raise
        except (requests.RequestException, ValueError) as exc:
            last_error = exc
            if attempt < TRANSPORT_RETRIES:
                logger.warning("transport failure on %s (attempt %d/%d): %s",
                               url, attempt, TRANSPORT_RETRIES, exc)
                time.sleep(retry_wait_s)
    raise TransportError(f"{url} unreachable after {TRANSPORT_RETRIES} attempts: {last_error}")


class HttpLlm(LlmBackend):
    """Chat-completions client for OpenAI-compatible servers.

    The endpoint's configured sampling applies to every call; a request
    carrying non-stock sampling values overrides it for that call.
    """

    def __init__(self, endpoint: HttpEndpoint, supports_vision: bool = False,
                 retry_wait_s: float = 1.0,
                 sampling: SamplingParams = SamplingParams()) -> None:
        self.endpoint = endpoint
        self.supports_vision = supports_vision
        self.retry_wait_s = retry_wait_s
        self.sampling = sampling
        self.backend_id = f"http:{endpoint.model}"

    def complete(self, request: LlmRequest) -> str:
        self._check_vision(request)
        sampling = (request.sampling if request.sampling != SamplingParams()
                    else self.sampling)
        messages: list[dict] = []
        if request.system_prompt:
            messages.append({"role": "system", "content": request.system_prompt})
        if request.images:
            content: list[dict] = [{"type": "text", "text": request.user_prompt}]
            for img in request.images:
                content.append({
                    "type": "image_url",
                    "image_url": {"url": f"data:{img.media_type};base64,{img.data_b64}"},
                })
            messages.append({"role": "user", "content": content})
        else:
            messages.append({"role": "user", "content": request.user_prompt})
        payload = {
            "model": self.endpoint.model,
            "messages": messages,
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "repeat_penalty": sampling.repeat_penalty,
        }
        data = _post_with_retries(f"{self.endpoint.base_url.rstrip('/')}/chat/completions",
                                  payload, self.endpoint.headers(),
                                  self.endpoint.timeout_s, self.retry_wait_s)
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed chat-completions response: {exc}") from exc
        if not text:
            raise BackendError(f"backend {self.backend_id} returned an empty response")
        return text


class HttpEmbedder(EmbedderBackend):
    """Embeddings client for OpenAI-compatible servers."""

    def __init__(self, endpoint: HttpEndpoint, output_dim: int,
                 retry_wait_s: float = 1.0) -> None:
        if output_dim <= 0:
            raise ValueError("output_dim must be positive")
        self.endpoint = endpoint
        self.output_dim = output_dim
        self.retry_wait_s = retry_wait_s
        self.backend_id = f"http:{endpoint.model}"

    def embed(self, text: str) -> np.ndarray:
        self._check_text(text)
        payload = {"model": self.endpoint.model, "input": text}
        data = _post_with_retries(f"{self.endpoint.base_url.rstrip('/')}/embeddings",
                                  payload, self.endpoint.headers(),
                                  self.endpoint.timeout_s, self.retry_wait_s)
        try:
            values = data["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed embeddings response: {exc}") from exc
        vec = np.asarray(values, dtype=np.float64)
        if vec.shape != (self.output_dim,):
            raise BackendError(f"backend {self.backend_id} returned dimension "
                               f"{vec.shape}, expected ({self.output_dim},)")
        return vec
