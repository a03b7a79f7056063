// Page wiring: upload panel, TOC sidebar, chat transcript, mode/iteration
// controls. All state lives in a single UiSessionView; every change
// re-renders from server payloads.

import { ApiClient, ApiError } from "./api.js";
import {
  canSend,
  initialState,
  withAnswer,
  withBanner,
  withDocument,
  withIterations,
  withMessageError,
  withMode,
  withUserMessage,
  type UiSessionView,
} from "./state.js";
import { renderBanner, renderMessages, renderToc } from "./render.js";
import type { RetrievalMode } from "./types.js";

const API_BASE = (window as { DOCSRAY_API_BASE?: string }).DOCSRAY_API_BASE
  ?? "http://127.0.0.1:8000";

const api = new ApiClient(API_BASE);
let state: UiSessionView = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function redraw(): void {
  const bannerZone = el<HTMLDivElement>("banner-zone");
  bannerZone.replaceChildren();
  if (state.banner) {
    const banner = renderBanner(state.banner);
    banner.querySelector(".banner-retry")?.addEventListener("click", () => {
      state = withBanner(state, null);
      redraw();
    });
    bannerZone.appendChild(banner);
  }

  const tocZone = el<HTMLDivElement>("toc-zone");
  tocZone.replaceChildren(renderToc(state.toc));

  const transcript = el<HTMLDivElement>("transcript");
  transcript.replaceChildren(renderMessages(state.messages, tocZone));
  transcript.scrollTop = transcript.scrollHeight;

  const input = el<HTMLInputElement>("chat-input");
  const send = el<HTMLButtonElement>("send-button");
  input.disabled = state.pending || state.sessionId === null;
  send.disabled = !canSend(state, input.value);
  el<HTMLSpanElement>("doc-label").textContent =
    state.docId ? `document: ${state.docId}` : "no document loaded";
}

async function openDocument(docId: string, toc: UiSessionView["toc"]): Promise<void> {
  const session = await api.createSession(docId);
  state = withDocument(state, { doc_id: docId, toc }, session.session_id);
  redraw();
}

async function handleUpload(): Promise<void> {
  const picker = el<HTMLInputElement>("file-input");
  const file = picker.files?.[0];
  if (!file) return;
  try {
    const uploaded = await api.uploadFile(file, file.name);
    await openDocument(uploaded.doc_id, uploaded.toc);
  } catch (error) {
    state = withBanner(state, error instanceof ApiError
      ? `upload failed: ${error.message}`
      : "upload failed: server unreachable");
    redraw();
  }
}

async function refreshDocumentList(): Promise<void> {
  const select = el<HTMLSelectElement>("doc-select");
  try {
    const { documents } = await api.listDocuments();
    select.replaceChildren();
    const placeholder = document.createElement("option");
    placeholder.value = "";
    placeholder.textContent = documents.length
      ? "open existing document…" : "no documents on server";
    select.appendChild(placeholder);
    for (const doc of documents) {
      const option = document.createElement("option");
      option.value = doc.doc_id;
      option.textContent = `${doc.doc_id} (${doc.n_sections} sections)`;
      select.appendChild(option);
    }
  } catch {
    // listing is a convenience; the banner is reserved for user actions
  }
}

async function handleSend(): Promise<void> {
  const input = el<HTMLInputElement>("chat-input");
  const text = input.value.trim();
  const sessionId = state.sessionId;
  if (!canSend(state, text) || sessionId === null) return;
  input.value = "";
  state = withUserMessage(state, text);
  redraw();
  try {
    const result = await api.sendMessage(sessionId, text, state.mode,
                                         state.iterations);
    state = withAnswer(state, result.answer);
  } catch (error) {
    state = withMessageError(state, error instanceof ApiError
      ? `error: ${error.message}` : "error: server unreachable");
  }
  redraw();
}

export function boot(): void {
  el<HTMLButtonElement>("upload-button").addEventListener("click", handleUpload);
  el<HTMLButtonElement>("send-button").addEventListener("click", handleSend);
  el<HTMLInputElement>("chat-input").addEventListener("keydown", (event) => {
    if (event.key === "Enter") void handleSend();
  });
  el<HTMLInputElement>("chat-input").addEventListener("input", redraw);

  el<HTMLSelectElement>("doc-select").addEventListener("change", async (event) => {
    const docId = (event.target as HTMLSelectElement).value;
    if (!docId) return;
    try {
      const { toc } = await api.getToc(docId);
      await openDocument(docId, toc);
    } catch (error) {
      state = withBanner(state, error instanceof ApiError
        ? error.message : "server unreachable");
      redraw();
    }
  });

  for (const radio of Array.from(
      document.querySelectorAll<HTMLInputElement>("input[name=mode]"))) {
    radio.addEventListener("change", () => {
      state = withMode(state, radio.value as RetrievalMode);
    });
  }
  el<HTMLSelectElement>("iterations-select").addEventListener("change", (event) => {
    state = withIterations(state, Number((event.target as HTMLSelectElement).value));
  });

  void refreshDocumentList();
  redraw();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
