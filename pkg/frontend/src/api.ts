// Typed client for the engine's HTTP API. Every error response is a
// {code, message} object; ApiError carries both.

import type {
  AnswerPayload,
  DocumentInfo,
  MessageResult,
  RetrievalMode,
  TocEntry,
  UploadResult,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = "error";
  let message = `${resp.status} ${resp.statusText}`;
  try {
    const body = (await resp.json()) as { code?: string; message?: string };
    if (body.code) code = body.code;
    if (body.message) message = body.message;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  listDocuments(): Promise<{ documents: DocumentInfo[] }> {
    return this.request("/documents");
  }

  uploadFile(file: Blob, filename: string, docId?: string): Promise<UploadResult> {
    const form = new FormData();
    form.append("file", file, filename);
    if (docId) form.append("doc_id", docId);
    return this.request("/documents", { method: "POST", body: form });
  }

  getToc(docId: string): Promise<{ doc_id: string; toc: TocEntry[] }> {
    return this.request(`/documents/${encodeURIComponent(docId)}/toc`);
  }

  createSession(docId: string): Promise<{ session_id: string; doc_id: string }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ doc_id: docId }),
    });
  }

  sendMessage(
    sessionId: string,
    text: string,
    mode: RetrievalMode,
    iterations: number,
  ): Promise<MessageResult> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/messages`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text, mode, iterations }),
    });
  }

  query(
    docId: string,
    question: string,
    mode: RetrievalMode,
    iterations: number,
  ): Promise<AnswerPayload> {
    return this.request(`/documents/${encodeURIComponent(docId)}/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ question, mode, iterations }),
    });
  }
}
