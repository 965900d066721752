"""Page/line document model and ingestion of pre-extracted page text."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any


class IngestionError(ValueError):
    """Raised when a page-lines file does not match the expected layout."""


@dataclass(frozen=True)
class Page:
    index: int
    lines: tuple[str, ...]
    has_figure: bool = False


@dataclass(frozen=True)
class Document:
    doc_id: str
    pages: tuple[Page, ...]
    source_path: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "pages": [
                {"index": p.index, "lines": list(p.lines), "has_figure": p.has_figure}
                for p in self.pages
            ],
        }


def _parse_page(raw: Any, position: int) -> Page:
    if not isinstance(raw, dict):
        raise IngestionError(f"page {position}: expected an object")
    index = raw.get("index", position)
    if not isinstance(index, int) or isinstance(index, bool):
        raise IngestionError(f"page {position}: index must be an integer")
    if index != position:
        raise IngestionError(
            f"page {index}: indices must be 0-based and contiguous (expected {position})"
        )
    lines = raw.get("lines")
    if not isinstance(lines, list) or not all(isinstance(s, str) for s in lines):
        raise IngestionError(f"page {index}: lines must be a list of strings")
    has_figure = raw.get("has_figure", False)
    if not isinstance(has_figure, bool):
        raise IngestionError(f"page {index}: has_figure must be a boolean")
    return Page(index=index, lines=tuple(lines), has_figure=has_figure)


def document_from_dict(data: Any, source_path: str = "") -> Document:
    if not isinstance(data, dict) or "pages" not in data:
        raise IngestionError("expected an object with a 'pages' array")
    raw_pages = data["pages"]
    if not isinstance(raw_pages, list):
        raise IngestionError("'pages' must be an array")
    if not raw_pages:
        raise IngestionError("document has no pages")
    pages = tuple(_parse_page(raw, i) for i, raw in enumerate(raw_pages))
    doc_id = data.get("doc_id") or Path(source_path).stem or "document"
    return Document(doc_id=str(doc_id), pages=pages, source_path=source_path)


def load_document(path: str | Path) -> Document:
    """Read a page-lines JSON file.

    Lines are kept exactly as extracted; figure flags are copied verbatim.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: invalid JSON ({exc})") from exc
    return document_from_dict(data, source_path=str(path))


def save_document(doc: Document, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(doc.to_dict(), ensure_ascii=False, indent=2), encoding="utf-8"
    )


def blank_page_indices(doc: Document) -> list[int]:
    return [p.index for p in doc.pages if all(not line.strip() for line in p.lines)]
