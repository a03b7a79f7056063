"""Page-level content extraction: column merging, table detection, graphics
filtering, visual descriptions, and OCR fallback.

Works on pre-extracted layout (blocks with bounding boxes plus image
statistics); rasterization and pixel analysis happen upstream of the engine.
Page units are whatever units the source bounding boxes use.
"""

from __future__ import annotations

import enum
import json
import logging
import mimetypes
import re
import statistics
from dataclasses import dataclass
from pathlib import Path

from .corpus import Document, Page
from .errors import LayoutParseError
from .prompts import OCR_PROMPT, VISUAL_SINGLE_PROMPT, visual_multi_prompt
from .providers import ImagePayload, LlmBackend, LlmRequest

logger = logging.getLogger(__name__)

# Appendix-style heuristics thresholds (page units mirror source pixels).
MIN_GRAPHIC_SIDE = 50.0
MIN_UNIQUE_COLOR_RATIO = 0.10
MAX_WHITE_RATIO = 0.80
MAX_ASPECT_RATIO = 10.0
MAX_DRAWING_COMMANDS = 50
MAX_PATHS = 100
MIN_DESCRIBE_SIDE = 100.0
MIN_TABLE_ROWS = 3
MIN_TABLE_WIDTH = 100.0
MIN_TABLE_HEIGHT = 50.0
COLUMN_SEPARATION_FRACTION = 0.25
ROW_CLUSTER_HEIGHT_FRACTION = 0.40
X_ALIGN_WIDTH_FRACTION = 0.02
OCR_TRIGGER_CHARS = 50


@dataclass(frozen=True)
class LayoutBlock:
    text: str
    bbox: tuple[float, float, float, float]  # (x0, y0, x1, y1)

    def __post_init__(self) -> None:
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"malformed bbox {self.bbox}: need x0 < x1 and y0 < y1")

    @property
    def x_center(self) -> float:
        return (self.bbox[0] + self.bbox[2]) / 2.0

    @property
    def y_center(self) -> float:
        return (self.bbox[1] + self.bbox[3]) / 2.0

    @property
    def height(self) -> float:
        return self.bbox[3] - self.bbox[1]


@dataclass(frozen=True)
class ImageMeta:
    """Statistics for one embedded image, computed upstream."""

    width_px: float
    height_px: float
    unique_color_ratio: float
    white_ratio: float
    drawing_command_count: int = 0
    path_count: int = 0
    payload: bytes | None = None
    media_type: str = "application/octet-stream"

    def __post_init__(self) -> None:
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError("image dimensions must be positive")
        for name in ("unique_color_ratio", "white_ratio"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class RawPage:
    index: int
    blocks: tuple[LayoutBlock, ...] = ()
    images: tuple[ImageMeta, ...] = ()
    page_render: bytes | None = None
    page_render_media_type: str = "application/octet-stream"


class GraphicsDecision(enum.Enum):
    KEEP = "keep"
    DROP = "drop"
    RENDER_WHOLE_PAGE = "render_whole_page"


@dataclass(frozen=True)
class TableRegion:
    bbox: tuple[float, float, float, float]
    rows: tuple[tuple[LayoutBlock, ...], ...]

    @property
    def blocks(self) -> tuple[LayoutBlock, ...]:
        return tuple(b for row in self.rows for b in row)


def _page_width(blocks: list[LayoutBlock] | tuple[LayoutBlock, ...]) -> float:
    return max(b.bbox[2] for b in blocks) - min(b.bbox[0] for b in blocks)


def _best_two_split(values: list[float]) -> tuple[float, float, float]:
    """Exact 1-D two-means: returns (centroid_left, centroid_right, threshold).

    Enumerating split points of the sorted values finds the global optimum of
    the k=2 objective, which iterative k-means only approximates; it is also
    deterministic, which the pipeline requires.
    """
    xs = sorted(values)
    n = len(xs)
    best = (float("inf"), xs[0], xs[-1], xs[0])
    prefix = [0.0]
    prefix_sq = [0.0]
    for x in xs:
        prefix.append(prefix[-1] + x)
        prefix_sq.append(prefix_sq[-1] + x * x)
    for split in range(1, n):
        left_n, right_n = split, n - split
        left_sum = prefix[split]
        right_sum = prefix[n] - left_sum
        left_sq = prefix_sq[split]
        right_sq = prefix_sq[n] - left_sq
        sse = (left_sq - left_sum ** 2 / left_n) + (right_sq - right_sum ** 2 / right_n)
        if sse < best[0]:
            best = (sse, left_sum / left_n, right_sum / right_n, xs[split - 1])
    _, c_left, c_right, threshold = best
    return c_left, c_right, threshold


def detect_columns(blocks: list[LayoutBlock]) -> list[LayoutBlock]:
    """Order blocks for reading: two-column when the x-centroid clusters are
    separated by more than 25% of page width, else a single (y, x) sweep.

    Always a permutation of the input: no block is lost or duplicated.
    """
    if not blocks:
        return []
    if len(blocks) == 1:
        return list(blocks)
    width = _page_width(blocks)
    single = sorted(blocks, key=lambda b: (b.bbox[1], b.bbox[0]))
    if width <= 0:
        return single
    c_left, c_right, threshold = _best_two_split([b.x_center for b in blocks])
    if (c_right - c_left) <= COLUMN_SEPARATION_FRACTION * width:
        return single
    left = [b for b in blocks if b.x_center <= threshold]
    right = [b for b in blocks if b.x_center > threshold]
    key = lambda b: (b.bbox[1], b.bbox[0])
    return sorted(left, key=key) + sorted(right, key=key)


def _cluster_rows(blocks: list[LayoutBlock] | tuple[LayoutBlock, ...]) -> list[list[LayoutBlock]]:
    """Group blocks into rows: y-centers within 40% of median block height."""
    tol = ROW_CLUSTER_HEIGHT_FRACTION * statistics.median(b.height for b in blocks)
    ordered = sorted(blocks, key=lambda b: (b.y_center, b.bbox[0], b.bbox[1]))
    rows: list[list[LayoutBlock]] = [[ordered[0]]]
    anchor = ordered[0].y_center
    for block in ordered[1:]:
        if abs(block.y_center - anchor) <= tol:
            rows[-1].append(block)
        else:
            rows.append([block])
            anchor = block.y_center
    for row in rows:
        row.sort(key=lambda b: b.bbox[0])
    return rows


def _rows_share_columns(row_a: list[LayoutBlock], row_b: list[LayoutBlock],
                        tol_x: float) -> bool:
    """True when at least 2 x-starts of row_a align with x-starts of row_b."""
    starts_b = [b.bbox[0] for b in row_b]
    aligned = 0
    for block in row_a:
        if any(abs(block.bbox[0] - x) <= tol_x for x in starts_b):
            aligned += 1
            if aligned >= 2:
                return True
    return False


def detect_tables(blocks: list[LayoutBlock]) -> list[TableRegion]:
    """Find table regions: >=3 consecutive rows of >=2 spans with aligned
    x-starts, whose union bbox exceeds 100x50 page units."""
    if len(blocks) < MIN_TABLE_ROWS * 2:
        return []
    tol_x = X_ALIGN_WIDTH_FRACTION * _page_width(blocks)
    rows = _cluster_rows(list(blocks))
    regions: list[TableRegion] = []
    run: list[list[LayoutBlock]] = []

    def flush() -> None:
        if len(run) < MIN_TABLE_ROWS:
            return
        members = [b for row in run for b in row]
        x0 = min(b.bbox[0] for b in members)
        y0 = min(b.bbox[1] for b in members)
        x1 = max(b.bbox[2] for b in members)
        y1 = max(b.bbox[3] for b in members)
        if (x1 - x0) > MIN_TABLE_WIDTH and (y1 - y0) > MIN_TABLE_HEIGHT:
            regions.append(TableRegion(bbox=(x0, y0, x1, y1),
                                       rows=tuple(tuple(r) for r in run)))

    for row in rows:
        if len(row) < 2:
            flush()
            run = []
            continue
        if run and not _rows_share_columns(run[-1], row, tol_x):
            flush()
            run = []
        run.append(row)
    flush()
    return regions


def filter_vector_graphics(meta: ImageMeta) -> GraphicsDecision:
    """Pure threshold filter for embedded graphics; drop wins over render."""
    if (meta.width_px < MIN_GRAPHIC_SIDE or meta.height_px < MIN_GRAPHIC_SIDE
            or meta.unique_color_ratio < MIN_UNIQUE_COLOR_RATIO
            or meta.white_ratio > MAX_WHITE_RATIO):
        return GraphicsDecision.DROP
    aspect = max(meta.width_px, meta.height_px) / min(meta.width_px, meta.height_px)
    if aspect > MAX_ASPECT_RATIO:
        return GraphicsDecision.DROP
    if meta.drawing_command_count > MAX_DRAWING_COMMANDS or meta.path_count > MAX_PATHS:
        return GraphicsDecision.RENDER_WHOLE_PAGE
    return GraphicsDecision.KEEP


_FIGURE_SPLIT_RE = re.compile(r"Figure\s+\d+:\s*")


def describe_visuals(images: list[ImagePayload], llm: LlmBackend) -> list[str]:
    """One caption per image via the vision LLM.

    Callers are responsible for the size gates (images >= 100x100, downscaled
    to <= 800px on the longest side) since payload statistics live upstream.
    """
    if not images:
        return []
    if len(images) == 1:
        reply = llm.complete(LlmRequest(user_prompt=VISUAL_SINGLE_PROMPT,
                                        images=tuple(images)))
        return [reply.strip()]
    prompt = visual_multi_prompt(len(images))
    reply = llm.complete(LlmRequest(user_prompt=prompt, images=tuple(images)))
    parts = _FIGURE_SPLIT_RE.split(reply)
    captions = [p.strip() for p in parts[1:]]
    if len(captions) != len(images):
        logger.warning("multi-image caption parse failed (%d markers for %d images); "
                       "attaching whole response to the first image",
                       len(captions), len(images))
        return [reply.strip()] + [""] * (len(images) - 1)
    return captions


def ocr_fallback(page: RawPage, llm: LlmBackend) -> str:
    """LLM-vision OCR over the page render; empty string when no render exists."""
    if page.page_render is None:
        logger.warning("page %d: OCR requested but no page render available", page.index)
        return ""
    payload = ImagePayload.from_bytes(page.page_render, page.page_render_media_type)
    reply = llm.complete(LlmRequest(user_prompt=OCR_PROMPT, images=(payload,)))
    return reply.strip()


def _table_caption(region: TableRegion) -> str:
    body = "\n".join(" | ".join(b.text for b in row if b.text) for row in region.rows)
    return f"Table:\n{body}"


def assemble_document(raw_pages: list[RawPage], llm: LlmBackend,
                      doc_id: str = "doc") -> Document:
    """Run the per-page pipeline and produce a Document.

    Per page: order blocks into reading order, serialize detected tables,
    filter graphics and caption the kept ones, describe the whole-page render
    when complex vector art demands it, and apply OCR when extracted text is
    under 50 characters.
    """
    pages: list[Page] = []
    for raw in raw_pages:
        ordered = detect_columns(list(raw.blocks))
        merged = "\n".join(b.text for b in ordered if b.text)
        captions: list[str] = []

        for region in detect_tables(list(raw.blocks)):
            captions.append(_table_caption(region))

        kept: list[ImagePayload] = []
        render_whole_page = False
        for meta in raw.images:
            decision = filter_vector_graphics(meta)
            if decision is GraphicsDecision.DROP:
                continue
            if decision is GraphicsDecision.RENDER_WHOLE_PAGE:
                render_whole_page = True
                continue
            if meta.width_px < MIN_DESCRIBE_SIDE or meta.height_px < MIN_DESCRIBE_SIDE:
                continue
            if meta.payload is None:
                logger.warning("page %d: kept image has no payload; skipping description",
                               raw.index)
                continue
            kept.append(ImagePayload.from_bytes(meta.payload, meta.media_type))
        captions.extend(describe_visuals(kept, llm))

        if render_whole_page and raw.page_render is not None:
            payload = ImagePayload.from_bytes(raw.page_render, raw.page_render_media_type)
            captions.extend(describe_visuals([payload], llm))

        ocr_applied = False
        if len(merged) < OCR_TRIGGER_CHARS:
            if raw.page_render is not None:
                ocr_text = ocr_fallback(raw, llm)
                merged = f"{merged}\n{ocr_text}" if merged and ocr_text else (ocr_text or merged)
                ocr_applied = True
            else:
                logger.warning("page %d: only %d characters extracted and no render "
                               "for OCR fallback", raw.index, len(merged))

        pages.append(Page(index=raw.index, text=merged,
                          visual_descriptions=tuple(captions),
                          ocr_applied=ocr_applied))
    return Document(doc_id=doc_id, pages=tuple(pages), source_kind="paged_layout")


def load_plain_text(text: str, page_delimiter: str = "\f",
                    doc_id: str = "doc") -> Document:
    """Split plain text into one Page per delimiter-separated segment."""
    if not text:
        raise ValueError("cannot load empty text")
    segments = text.split(page_delimiter)
    pages = tuple(Page(index=i, text=seg) for i, seg in enumerate(segments))
    return Document(doc_id=doc_id, pages=pages, source_kind="plain_text")


def _parse_bbox(value: object, where: str) -> tuple[float, float, float, float]:
    if (not isinstance(value, (list, tuple)) or len(value) != 4
            or not all(isinstance(v, (int, float)) for v in value)):
        raise LayoutParseError(f"{where}: bbox must be [x0, y0, x1, y1] numbers")
    x0, y0, x1, y1 = (float(v) for v in value)
    if not (x0 < x1 and y0 < y1):
        raise LayoutParseError(f"{where}: bbox requires x0 < x1 and y0 < y1")
    return (x0, y0, x1, y1)


def _read_payload(ref: object, base_dir: Path, where: str) -> tuple[bytes, str]:
    if not isinstance(ref, str) or not ref:
        raise LayoutParseError(f"{where}: payload reference must be a relative path")
    path = base_dir / ref
    if not path.is_file():
        raise LayoutParseError(f"{where}: referenced payload {ref!r} not found")
    media_type = mimetypes.guess_type(ref)[0] or "application/octet-stream"
    return path.read_bytes(), media_type


def load_paged_layout(path: str | Path) -> list[RawPage]:
    """Parse a paged-layout JSON file into RawPages; payload refs are resolved
    relative to the file's directory and read eagerly."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise LayoutParseError(f"cannot read paged layout {path}: {exc}") from exc
    return parse_paged_layout(data, base_dir=path.parent)


def parse_paged_layout(data: object, base_dir: Path) -> list[RawPage]:
    if not isinstance(data, dict) or not isinstance(data.get("pages"), list):
        raise LayoutParseError("top level must be an object with a 'pages' list")
    raw_pages: list[RawPage] = []
    for i, page_obj in enumerate(data["pages"]):
        where = f"page {i}"
        if not isinstance(page_obj, dict):
            raise LayoutParseError(f"{where}: must be an object")
        if page_obj.get("index") != i:
            raise LayoutParseError(f"{where}: index must be {i} (0-based, contiguous)")

        blocks: list[LayoutBlock] = []
        for j, block_obj in enumerate(page_obj.get("blocks", [])):
            bwhere = f"{where}, blocks[{j}]"
            if not isinstance(block_obj, dict):
                raise LayoutParseError(f"{bwhere}: must be an object")
            bbox = _parse_bbox(block_obj.get("bbox"), f"{bwhere}.bbox")
            text = block_obj.get("text", "")
            if not isinstance(text, str):
                raise LayoutParseError(f"{bwhere}.text: must be a string")
            blocks.append(LayoutBlock(text=text, bbox=bbox))

        images: list[ImageMeta] = []
        for j, img_obj in enumerate(page_obj.get("images", [])):
            iwhere = f"{where}, images[{j}]"
            if not isinstance(img_obj, dict):
                raise LayoutParseError(f"{iwhere}: must be an object")
            payload = None
            media_type = "application/octet-stream"
            if img_obj.get("payload_ref"):
                payload, media_type = _read_payload(img_obj["payload_ref"], base_dir,
                                                    f"{iwhere}.payload_ref")
            try:
                images.append(ImageMeta(
                    width_px=float(img_obj.get("width_px", 0)),
                    height_px=float(img_obj.get("height_px", 0)),
                    unique_color_ratio=float(img_obj.get("unique_color_ratio", 0.0)),
                    white_ratio=float(img_obj.get("white_ratio", 0.0)),
                    drawing_command_count=int(img_obj.get("drawing_command_count", 0)),
                    path_count=int(img_obj.get("path_count", 0)),
                    payload=payload,
                    media_type=media_type,
                ))
            except (TypeError, ValueError) as exc:
                raise LayoutParseError(f"{iwhere}: {exc}") from exc

        render = None
        render_media = "application/octet-stream"
        if page_obj.get("page_render_ref"):
            render, render_media = _read_payload(page_obj["page_render_ref"], base_dir,
                                                 f"{where}.page_render_ref")
        raw_pages.append(RawPage(index=i, blocks=tuple(blocks), images=tuple(images),
                                 page_render=render, page_render_media_type=render_media))
    if not raw_pages:
        raise LayoutParseError("paged layout contains no pages")
    return raw_pages
