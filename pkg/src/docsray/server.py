"""HTTP API over the engine: document upload/indexing, TOC, query, chat
sessions, and summaries. All errors come back as {code, message}."""

from __future__ import annotations

import itertools
import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from tempfile import mkdtemp

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .answer import Answer
from .chunk_index import INDEX_SUFFIX, IndexedCorpus, save_index
from .config import EngineConfig
from .engine import Engine, derive_doc_id
from .errors import (BackendError, CapabilityError, DocsrayError,
                     IndexFormatError, LayoutParseError, TransportError)
from .retrieval import FLAT, HIERARCHICAL

logger = logging.getLogger(__name__)

_BACKEND_ERRORS = (TransportError, BackendError, CapabilityError)


class QueryBody(BaseModel):
    question: str
    mode: str = HIERARCHICAL
    iterations: int | None = None


class SessionBody(BaseModel):
    doc_id: str


class MessageBody(BaseModel):
    text: str
    mode: str = HIERARCHICAL
    iterations: int | None = None


@dataclass
class ChatSession:
    session_id: str
    doc_id: str
    turns: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _toc_payload(corpus: IndexedCorpus) -> list[dict]:
    return [{"section_id": s.section_id, "title": s.title,
             "page_start": s.page_start, "page_end": s.page_end}
            for s in corpus.sections]


def _answer_payload(answer: Answer) -> dict:
    final = answer.final_retrieval
    return {
        "text": answer.text,
        "references": [{"title": r.title, "page_start": r.page_start,
                        "page_end": r.page_end} for r in answer.references],
        "stats": {
            "mode": final.stats.mode,
            "similarity_comparisons": final.stats.similarity_comparisons,
            "sections_scored": final.stats.sections_scored,
            "chunks_scored": final.stats.chunks_scored,
        },
        "consulted_sections": list(final.consulted_sections),
        "refinement": {
            "q0": answer.refinement.q0,
            "refined_queries": list(answer.refinement.refined_queries),
            "final_query": answer.refinement.final_query,
        },
        "retrieval_count": len(answer.retrievals),
    }


def create_app(config: EngineConfig | None = None,
               data_dir: str | Path | None = None) -> FastAPI:
    config = config or EngineConfig()
    engine = Engine.from_config(config)
    data_path = Path(data_dir) if data_dir else Path(mkdtemp(prefix="docsray-"))
    data_path.mkdir(parents=True, exist_ok=True)

    documents: dict[str, IndexedCorpus] = {}
    sessions: dict[str, ChatSession] = {}
    session_counter = itertools.count(1)
    registry_lock = threading.Lock()

    for index_file in sorted(data_path.glob(f"*{INDEX_SUFFIX}")):
        try:
            corpus = engine.load_index(index_file)
            documents[corpus.doc_id] = corpus
            logger.info("loaded existing index %s (%s)", index_file, corpus.doc_id)
        except DocsrayError as exc:
            logger.warning("skipping unreadable index %s: %s", index_file, exc)

    app = FastAPI(title="docsray", version="0.1.0")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    def get_document(doc_id: str) -> IndexedCorpus:
        corpus = documents.get(doc_id)
        if corpus is None:
            raise HTTPException(status_code=404, detail=f"unknown document {doc_id!r}")
        return corpus

    def get_session(session_id: str) -> ChatSession:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"code": "bad_request", "message": str(exc)})

    @app.exception_handler(HTTPException)
    async def http_handler(request: Request, exc: HTTPException):
        code = {400: "bad_request", 404: "not_found", 502: "backend_error"}.get(
            exc.status_code, "error")
        return JSONResponse(status_code=exc.status_code,
                            content={"code": code, "message": str(exc.detail)})

    def run_answer(corpus: IndexedCorpus, question: str, mode: str,
                   iterations: int | None) -> dict:
        if mode not in (HIERARCHICAL, FLAT):
            raise HTTPException(status_code=400, detail=f"unknown mode {mode!r}")
        if iterations is not None and not 0 <= iterations <= 2:
            raise HTTPException(status_code=400,
                                detail="iterations must be 0, 1, or 2")
        if not question.strip():
            raise HTTPException(status_code=400, detail="question must be non-empty")
        try:
            answer = engine.answer(question, corpus, mode=mode, iterations=iterations)
        except _BACKEND_ERRORS as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return _answer_payload(answer)

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/documents")
    async def list_documents() -> dict:
        return {"documents": [{"doc_id": c.doc_id, "n_sections": c.n_sections,
                               "n_chunks": c.n_chunks, "n_pages": c.n_pages}
                              for c in documents.values()]}

    @app.post("/documents", status_code=201)
    async def upload_document(request: Request) -> dict:
        content_type = request.headers.get("content-type", "")
        try:
            if content_type.startswith("multipart/form-data"):
                form = await request.form()
                upload = form.get("file")
                if upload is None or isinstance(upload, str):
                    raise HTTPException(status_code=400,
                                        detail="multipart body needs a 'file' part")
                raw = await upload.read()
                doc_id = str(form.get("doc_id") or derive_doc_id(upload.filename or "doc"))
                fmt = str(form.get("format") or
                          ("paged-layout" if (upload.filename or "").endswith(".json")
                           else "text"))
                if fmt == "paged-layout":
                    payload = json.loads(raw.decode("utf-8"))
                    doc = engine.document_from_layout_payload(payload, data_path, doc_id)
                else:
                    text = raw.decode("utf-8")
                    if not text.strip():
                        raise HTTPException(status_code=400, detail="empty document")
                    doc = engine.document_from_text(text, doc_id)
            elif content_type.startswith("application/json"):
                body = await request.json()
                if not isinstance(body, dict):
                    raise HTTPException(status_code=400, detail="body must be an object")
                doc_id = str(body.get("doc_id") or "doc")
                if "pages" in body:
                    doc = engine.document_from_layout_payload(body, data_path, doc_id)
                elif isinstance(body.get("text"), str) and body["text"].strip():
                    doc = engine.document_from_text(body["text"], doc_id)
                else:
                    raise HTTPException(status_code=400,
                                        detail="JSON body needs 'pages' or 'text'")
            else:
                raise HTTPException(status_code=400,
                                    detail=f"unsupported content type {content_type!r}")
            toc = engine.build_toc(doc)
            corpus = engine.index(doc, toc)
        except HTTPException:
            raise
        except _BACKEND_ERRORS as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        except (LayoutParseError, IndexFormatError, ValueError,
                json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        with registry_lock:
            documents[corpus.doc_id] = corpus
        save_index(corpus, data_path / f"{corpus.doc_id}{INDEX_SUFFIX}")
        return {"doc_id": corpus.doc_id, "toc": _toc_payload(corpus),
                "n_chunks": corpus.n_chunks}

    @app.get("/documents/{doc_id}/toc")
    async def document_toc(doc_id: str) -> dict:
        corpus = get_document(doc_id)
        return {"doc_id": doc_id, "toc": _toc_payload(corpus)}

    @app.post("/documents/{doc_id}/query")
    async def document_query(doc_id: str, body: QueryBody) -> dict:
        corpus = get_document(doc_id)
        return run_answer(corpus, body.question, body.mode, body.iterations)

    @app.get("/documents/{doc_id}/summary")
    async def document_summary(doc_id: str, mode: str = "brief") -> dict:
        from .answer import summarize_document
        corpus = get_document(doc_id)
        if mode not in ("brief", "detailed"):
            raise HTTPException(status_code=400, detail=f"unknown mode {mode!r}")
        try:
            summary = summarize_document(corpus, mode, engine.llm)
        except _BACKEND_ERRORS as exc:
            raise HTTPException(status_code=502, detail=str(exc)) from exc
        return {"doc_id": doc_id, "mode": summary.mode,
                "executive": summary.executive,
                "sections": [{"section_id": s.section_id, "title": s.title,
                              "summary": s.summary} for s in summary.sections]}

    @app.post("/sessions", status_code=201)
    async def create_session(body: SessionBody) -> dict:
        get_document(body.doc_id)
        session_id = f"sess-{next(session_counter)}"
        with registry_lock:
            sessions[session_id] = ChatSession(session_id=session_id,
                                               doc_id=body.doc_id)
        return {"session_id": session_id, "doc_id": body.doc_id}

    @app.post("/sessions/{session_id}/messages")
    async def post_message(session_id: str, body: MessageBody) -> dict:
        session = get_session(session_id)
        corpus = get_document(session.doc_id)
        with session.lock:
            payload = run_answer(corpus, body.text, body.mode, body.iterations)
            session.turns.append({"user": body.text, "answer": payload})
            return {"session_id": session_id, "turn": len(session.turns),
                    "answer": payload}

    @app.get("/sessions/{session_id}")
    async def session_history(session_id: str) -> dict:
        session = get_session(session_id)
        return {"session_id": session_id, "doc_id": session.doc_id,
                "turns": session.turns}

    return app
