// DOM builders. Pure functions from server payloads to elements; values are
// rendered verbatim, never recomputed client-side.

import type { ChatMessage } from "./state.js";
import type { ReferenceEntry, TocEntry } from "./types.js";

// References link back to their TOC entry by the fields both sides share.
export function refKey(entry: { title: string; page_start: number; page_end: number }): string {
  return `${entry.title}|${entry.page_start}|${entry.page_end}`;
}

export function renderToc(entries: TocEntry[]): HTMLUListElement {
  const list = document.createElement("ul");
  list.className = "toc";
  for (const entry of entries) {
    const item = document.createElement("li");
    item.className = "toc-entry";
    item.dataset.sectionId = entry.section_id;
    item.dataset.refKey = refKey(entry);

    const title = document.createElement("span");
    title.className = "toc-title";
    title.textContent = entry.title;

    const pages = document.createElement("span");
    pages.className = "toc-pages";
    pages.textContent = `pages ${entry.page_start}–${entry.page_end}`;

    item.append(title, pages);
    list.appendChild(item);
  }
  return list;
}

export function highlightTocEntry(tocRoot: HTMLElement, key: string): void {
  for (const item of Array.from(tocRoot.querySelectorAll<HTMLElement>(".toc-entry"))) {
    item.classList.toggle("highlight", item.dataset.refKey === key);
  }
}

function renderReferences(references: ReferenceEntry[], tocRoot: HTMLElement | null): HTMLElement {
  const details = document.createElement("details");
  details.className = "references";
  details.open = true;
  const summary = document.createElement("summary");
  summary.textContent = `References (${references.length})`;
  details.appendChild(summary);

  const list = document.createElement("ul");
  for (const ref of references) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.href = "#";
    link.className = "reference-link";
    link.dataset.refKey = refKey(ref);
    link.textContent = `[${ref.title}, Pages ${ref.page_start}-${ref.page_end}]`;
    link.addEventListener("click", (event) => {
      event.preventDefault();
      if (tocRoot) highlightTocEntry(tocRoot, refKey(ref));
    });
    item.appendChild(link);
    list.appendChild(item);
  }
  details.appendChild(list);
  return details;
}

function renderStats(message: ChatMessage): HTMLElement {
  const answer = message.answer!;
  const details = document.createElement("details");
  details.className = "stats";
  const summary = document.createElement("summary");
  summary.textContent = "Retrieval stats";
  details.appendChild(summary);

  const dl = document.createElement("dl");
  const rows: Array<[string, string]> = [
    ["mode", answer.stats.mode],
    ["comparisons", String(answer.stats.similarity_comparisons)],
    ["sections scored", String(answer.stats.sections_scored)],
    ["chunks scored", String(answer.stats.chunks_scored)],
    ["retrievals", String(answer.retrieval_count)],
  ];
  for (const [label, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = label;
    const dd = document.createElement("dd");
    dd.dataset.stat = label.replace(/ /g, "-");
    dd.textContent = value;
    dl.append(dt, dd);
  }
  details.appendChild(dl);

  if (answer.refinement.refined_queries.length > 0) {
    const trace = document.createElement("div");
    trace.className = "refinement-trace";
    const final = document.createElement("code");
    final.textContent = answer.refinement.final_query;
    trace.append("refined query: ", final);
    details.appendChild(trace);
  }
  return details;
}

export function renderMessage(message: ChatMessage, tocRoot: HTMLElement | null): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = `message ${message.role}`;

  const body = document.createElement("p");
  body.className = "message-text";
  body.textContent = message.text;
  bubble.appendChild(body);

  if (message.role === "assistant" && message.answer) {
    if (message.answer.references.length > 0) {
      bubble.appendChild(renderReferences(message.answer.references, tocRoot));
    }
    bubble.appendChild(renderStats(message));
  }
  return bubble;
}

export function renderMessages(messages: ChatMessage[], tocRoot: HTMLElement | null): HTMLElement {
  const container = document.createElement("div");
  container.className = "messages";
  for (const message of messages) {
    container.appendChild(renderMessage(message, tocRoot));
  }
  return container;
}

export function renderBanner(message: string): HTMLElement {
  const banner = document.createElement("div");
  banner.className = "error-banner";
  banner.setAttribute("role", "alert");
  banner.textContent = message;

  const retry = document.createElement("button");
  retry.className = "banner-retry";
  retry.textContent = "Retry";
  banner.appendChild(retry);
  return banner;
}
