// Pure state transitions for the chat view. The UI computes nothing itself:
// every number shown comes from a server payload carried in this state.

import type { AnswerPayload, RetrievalMode, TocEntry, UploadResult } from "./types.js";

export interface ChatMessage {
  role: "user" | "assistant" | "error";
  text: string;
  answer?: AnswerPayload;
}

export interface UiSessionView {
  docId: string | null;
  sessionId: string | null;
  toc: TocEntry[];
  messages: ChatMessage[];
  pending: boolean;
  mode: RetrievalMode;
  iterations: number;
  banner: string | null;
}

export function initialState(): UiSessionView {
  return {
    docId: null,
    sessionId: null,
    toc: [],
    messages: [],
    pending: false,
    mode: "hierarchical",
    iterations: 1,
    banner: null,
  };
}

export function withDocument(
  state: UiSessionView,
  upload: { doc_id: string; toc: TocEntry[] },
  sessionId: string,
): UiSessionView {
  return {
    ...state,
    docId: upload.doc_id,
    sessionId,
    toc: upload.toc,
    messages: [],
    pending: false,
    banner: null,
  };
}

export function withUserMessage(state: UiSessionView, text: string): UiSessionView {
  return {
    ...state,
    pending: true,
    messages: [...state.messages, { role: "user", text }],
  };
}

export function withAnswer(state: UiSessionView, answer: AnswerPayload): UiSessionView {
  return {
    ...state,
    pending: false,
    messages: [...state.messages, { role: "assistant", text: answer.text, answer }],
  };
}

export function withMessageError(state: UiSessionView, message: string): UiSessionView {
  return {
    ...state,
    pending: false,
    messages: [...state.messages, { role: "error", text: message }],
  };
}

export function withBanner(state: UiSessionView, message: string | null): UiSessionView {
  return { ...state, banner: message };
}

export function withMode(state: UiSessionView, mode: RetrievalMode): UiSessionView {
  return { ...state, mode };
}

export function withIterations(state: UiSessionView, iterations: number): UiSessionView {
  if (iterations < 0 || iterations > 2) {
    throw new Error("iterations must be 0, 1, or 2");
  }
  return { ...state, iterations };
}

// One in-flight message per session: sending is allowed only when a session
// exists, nothing is pending, and the draft is non-empty.
export function canSend(state: UiSessionView, draft: string): boolean {
  return state.sessionId !== null && !state.pending && draft.trim().length > 0;
}
