"""Prompt templates for structuring, retrieval refinement, and summarization.

These strings are load-bearing: the deterministic mock LLM parses them back,
and golden-file tests pin them byte-for-byte. Change a template and you must
change the mock's parser and the goldens together.
"""

from __future__ import annotations

BOUNDARY_PROMPT = """\
Below are short excerpts from two consecutive pages.
If both excerpts discuss the same topic, reply with '0'.
If the second excerpt introduces a new topic, reply with '1'.
Reply with a single character only.

[Page A]
{first_page_text}

[Page B]
{second_page_text}"""

TITLE_PROMPT = """\
Here is a passage from the document.
Please propose ONE concise title that captures its main topic.

{section_sample}

Return ONLY the title text, without any additional commentary or formatting."""

CHAT_SYSTEM_PROMPT = """\
Basic Principles
1) Check document context first, then use reliable knowledge if needed.
2) Provide accurate information without unnecessary disclaimers.
3) Always respond in the same language as the user's question."""

QUERY_REFINEMENT_PROMPT = """\
The user question is: {query}

The retrieved chunks are:
{combined_answer}

Write ONE concise follow-up question that would help retrieve even more relevant information.
Return ONLY the question text. Do not include any additional text or explanations."""

ALTERNATIVE_QUERIES_PROMPT = """\
Given the search query: "{query}"

Generate 3 alternative search queries that might find relevant documents.
Consider synonyms, related terms, and different phrasings.
Return only the queries, one per line.

Alternative queries:"""

ANALYST_SYSTEM_PROMPT = """\
You are a professional document analyst. Your task is to create a comprehensive summary of a PDF document based on its sections.

Guidelines:
- Provide a structured summary that follows the document's table of contents
- For each section, include key points, main arguments, and important details
- Maintain the hierarchical structure of the document
- Use clear, concise language while preserving technical accuracy
- Include relevant quotes or specific data points when they are crucial
- Highlight connections between different sections when relevant"""

EXECUTIVE_SUMMARY_PROMPT = """\
Based on a document with these sections: {section_titles}

Provide a brief executive summary (2-3 paragraphs) highlighting the main theme and key findings."""

SECTION_SUMMARY_BRIEF_PROMPT = """\
Summarize this section "{title}" in 2-3 sentences:
{content}

Summary:"""

SECTION_SUMMARY_DETAILED_PROMPT = """\
Based on the following content from section "{title}", provide a concise summary
highlighting the main points, key arguments, and important details:

{content}

Summary (2-3 paragraphs):"""

VISUAL_SINGLE_PROMPT = (
    "Describe this visual content. If it's a chart, graph, or diagram, explain "
    "what data or information it shows. If it's a photo or illustration, "
    "describe what it depicts. Be concise but informative."
)

VISUAL_MULTI_PROMPT = """\
Describe these {n} visual elements in order:

Figure 1: [description]
Figure 2: [description]
...
Figure N: [description]

For each figure, identify if it's a chart/graph/diagram (and what data it shows) or a photo/illustration (and what it depicts). Start immediately with "Figure 1:"."""

OCR_PROMPT = (
    "Extract text from this image and present it as readable paragraphs. "
    "Start directly with the content."
)

GENERATION_PROMPT = """\
{context}

Question: {query}

Answer:"""


def boundary_prompt(first_page_text: str, second_page_text: str) -> str:
    return BOUNDARY_PROMPT.format(first_page_text=first_page_text,
                                  second_page_text=second_page_text)


def title_prompt(section_sample: str) -> str:
    return TITLE_PROMPT.format(section_sample=section_sample)


def refinement_prompt(query: str, combined_answer: str) -> str:
    return QUERY_REFINEMENT_PROMPT.format(query=query, combined_answer=combined_answer)


def alternative_queries_prompt(query: str) -> str:
    return ALTERNATIVE_QUERIES_PROMPT.format(query=query)


def executive_summary_prompt(section_titles: str) -> str:
    return EXECUTIVE_SUMMARY_PROMPT.format(section_titles=section_titles)


def section_summary_brief_prompt(title: str, content: str) -> str:
    return SECTION_SUMMARY_BRIEF_PROMPT.format(title=title, content=content)


def section_summary_detailed_prompt(title: str, content: str) -> str:
    return SECTION_SUMMARY_DETAILED_PROMPT.format(title=title, content=content)


def visual_multi_prompt(n: int) -> str:
    return VISUAL_MULTI_PROMPT.format(n=n)


def generation_prompt(context: str, query: str) -> str:
    return GENERATION_PROMPT.format(context=context, query=query)
