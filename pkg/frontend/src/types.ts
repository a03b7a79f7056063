// Server payload shapes, mirrored verbatim from the HTTP API.

export interface TocEntry {
  section_id: string;
  title: string;
  page_start: number;
  page_end: number;
}

export interface ReferenceEntry {
  title: string;
  page_start: number;
  page_end: number;
}

export interface Stats {
  mode: string;
  similarity_comparisons: number;
  sections_scored: number;
  chunks_scored: number;
}

export interface Refinement {
  q0: string;
  refined_queries: string[];
  final_query: string;
}

export interface AnswerPayload {
  text: string;
  references: ReferenceEntry[];
  stats: Stats;
  consulted_sections: string[];
  refinement: Refinement;
  retrieval_count: number;
}

export interface UploadResult {
  doc_id: string;
  toc: TocEntry[];
  n_chunks: number;
}

export interface DocumentInfo {
  doc_id: string;
  n_sections: number;
  n_chunks: number;
  n_pages: number;
}

export interface MessageResult {
  session_id: string;
  turn: number;
  answer: AnswerPayload;
}

export type RetrievalMode = "hierarchical" | "flat";
