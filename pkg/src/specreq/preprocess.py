"""Noise removal: cover page, blank pages, running headers/footers and the TOC.

Header/footer detection compares every line position of a reference page with
the same position on all later pages. Positions are indexed over the reference
page's lines taken forward and then in reverse, so that position ``m + r``
(``m`` reference lines) always designates the ``r``-th line from the bottom.
This keeps footers aligned when pages have different lengths.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from specreq.docmodel import Document, Page

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 5


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance between ``a`` and ``b``."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def within_distance(a: str, b: str, threshold: int) -> bool:
    if abs(len(a) - len(b)) > threshold:
        return False
    return levenshtein(a, b) <= threshold


@dataclass(frozen=True)
class HeaderFooterReport:
    detected_lines: frozenset[tuple[int, str]] = frozenset()
    removals: tuple[tuple[int, int], ...] = ()
    skipped_pages: tuple[int, ...] = ()
    reference_page: int | None = None
    reference_length: int = 0
    threshold: int = DEFAULT_THRESHOLD
    insufficient_pages: bool = False

    @property
    def canonical_texts(self) -> set[str]:
        return {text for _, text in self.detected_lines}

    @property
    def reference_lines(self) -> set[int]:
        """Physical line indices on the reference page that were detected."""
        m = self.reference_length
        return {_resolve(key, m, m) for key, _ in self.detected_lines}

    def to_dict(self) -> dict[str, Any]:
        return {
            "detected_lines": [
                {"position": key, "text": text} for key, text in sorted(self.detected_lines)
            ],
            "removals": [list(r) for r in self.removals],
            "skipped_pages": list(self.skipped_pages),
            "reference_page": self.reference_page,
            "reference_length": self.reference_length,
            "threshold": self.threshold,
            "insufficient_pages": self.insufficient_pages,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "HeaderFooterReport":
        return cls(
            detected_lines=frozenset(
                (d["position"], d["text"]) for d in data.get("detected_lines", [])
            ),
            removals=tuple(tuple(r) for r in data.get("removals", [])),
            skipped_pages=tuple(data.get("skipped_pages", [])),
            reference_page=data.get("reference_page"),
            reference_length=data.get("reference_length", 0),
            threshold=data.get("threshold", DEFAULT_THRESHOLD),
            insufficient_pages=data.get("insufficient_pages", False),
        )


def _resolve(key: int, reference_length: int, page_length: int) -> int | None:
    """Map a position key onto a line index of a page with ``page_length`` lines."""
    if key < reference_length:
        return key if key < page_length else None
    offset = key - reference_length
    return page_length - 1 - offset if offset < page_length else None


def detect_headers_footers(
    pages: Document | Sequence[Page], threshold: int = DEFAULT_THRESHOLD
) -> HeaderFooterReport:
    """Find line positions repeated (within ``threshold`` edits) on every page.

    The first page is the reference. A page whose line does not match is
    tolerated only when it carries a figure; any other mismatch rejects the
    position. Empty reference lines are never candidates.
    """
    if isinstance(pages, Document):
        pages = pages.pages
    pages = list(pages)
    if len(pages) < 2:
        logger.warning("header/footer detection needs at least 2 pages, got %d", len(pages))
        return HeaderFooterReport(
            reference_page=pages[0].index if pages else None,
            reference_length=len(pages[0].lines) if pages else 0,
            threshold=threshold,
            insufficient_pages=True,
        )

    reference = pages[0]
    m = len(reference.lines)
    detected: set[tuple[int, str]] = set()
    removals: set[tuple[int, int]] = set()
    skipped: set[int] = set()

    for key in range(2 * m):
        sentence = reference.lines[_resolve(key, m, m)].strip()
        if not sentence:
            continue
        repeated = True
        figure_skips = []
        for page in pages[1:]:
            idx = _resolve(key, m, len(page.lines))
            if idx is not None and within_distance(sentence, page.lines[idx].strip(), threshold):
                continue
            if page.has_figure:
                figure_skips.append(page.index)
                continue
            repeated = False
            break
        if not repeated:
            continue
        detected.add((key, sentence))
        skipped.update(figure_skips)
        for page in pages:
            idx = _resolve(key, m, len(page.lines))
            if idx is not None and within_distance(page.lines[idx].strip(), sentence, threshold):
                removals.add((page.index, idx))

    return HeaderFooterReport(
        detected_lines=frozenset(detected),
        removals=tuple(sorted(removals)),
        skipped_pages=tuple(sorted(skipped)),
        reference_page=reference.index,
        reference_length=m,
        threshold=threshold,
    )


def remove_cover(doc: Document) -> Document:
    """Drop page 0 and renumber the remaining pages from 0."""
    if len(doc.pages) <= 1:
        logger.warning("%s: removing the cover leaves no pages", doc.doc_id)
    pages = tuple(
        Page(index=i, lines=p.lines, has_figure=p.has_figure)
        for i, p in enumerate(doc.pages[1:])
    )
    return Document(doc_id=doc.doc_id, pages=pages, source_path=doc.source_path)


@dataclass(frozen=True)
class CleanPage:
    index: int
    lines: tuple[str, ...]
    line_numbers: tuple[int, ...]
    has_figure: bool = False


@dataclass(frozen=True)
class Provenance:
    header_footer: HeaderFooterReport = field(default_factory=HeaderFooterReport)
    cover_pages: tuple[int, ...] = ()
    blank_pages: tuple[int, ...] = ()
    toc_pages: tuple[int, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "header_footer": self.header_footer.to_dict(),
            "cover_pages": list(self.cover_pages),
            "blank_pages": list(self.blank_pages),
            "toc_pages": list(self.toc_pages),
        }


@dataclass(frozen=True)
class CleanDocument:
    """Document with noise removed. Page indices and line numbers are the originals."""

    doc_id: str
    pages: tuple[CleanPage, ...]
    provenance: Provenance = field(default_factory=Provenance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "pages": [
                {
                    "index": p.index,
                    "lines": list(p.lines),
                    "line_numbers": list(p.line_numbers),
                    "has_figure": p.has_figure,
                }
                for p in self.pages
            ],
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CleanDocument":
        pages = []
        for raw in data["pages"]:
            lines = tuple(raw["lines"])
            numbers = tuple(raw.get("line_numbers", range(len(lines))))
            pages.append(CleanPage(raw["index"], lines, numbers, raw.get("has_figure", False)))
        prov = data.get("provenance") or {}
        provenance = Provenance(
            header_footer=HeaderFooterReport.from_dict(prov.get("header_footer", {})),
            cover_pages=tuple(prov.get("cover_pages", ())),
            blank_pages=tuple(prov.get("blank_pages", ())),
            toc_pages=tuple(prov.get("toc_pages", ())),
        )
        return cls(doc_id=data.get("doc_id", "document"), pages=tuple(pages), provenance=provenance)

    @classmethod
    def from_document(cls, doc: Document) -> "CleanDocument":
        """Wrap a document without removing anything."""
        return cls(
            doc_id=doc.doc_id,
            pages=tuple(
                CleanPage(p.index, p.lines, tuple(range(len(p.lines))), p.has_figure)
                for p in doc.pages
            ),
        )


def _page_range(region: Iterable[int] | None) -> set[int]:
    if region is None:
        return set()
    bounds = list(region)
    if len(bounds) == 2:
        return set(range(bounds[0], bounds[1] + 1))
    return set(bounds)


def apply_preprocessing(
    doc: Document,
    toc_region: tuple[int, int] | None = None,
    threshold: int = DEFAULT_THRESHOLD,
) -> CleanDocument:
    """Remove the cover, blank pages, headers/footers and the TOC region.

    ``toc_region`` is an inclusive ``(first, last)`` range of original page
    indices. Header/footer detection runs after cover and blank-page removal,
    so the first content page is the reference.
    """
    cover = (doc.pages[0].index,) if doc.pages else ()
    if len(doc.pages) <= 1:
        logger.warning("%s: removing the cover leaves no pages", doc.doc_id)
    remaining = list(doc.pages[1:])
    blank = tuple(p.index for p in remaining if all(not s.strip() for s in p.lines))
    remaining = [p for p in remaining if p.index not in blank]

    report = detect_headers_footers(remaining, threshold=threshold)
    removed = set(report.removals)

    toc_pages = tuple(
        sorted(i for i in _page_range(toc_region) if i in {p.index for p in remaining})
    )
    pages = []
    for p in remaining:
        if p.index in toc_pages:
            continue
        kept = [(n, s) for n, s in enumerate(p.lines) if (p.index, n) not in removed]
        pages.append(
            CleanPage(
                index=p.index,
                lines=tuple(s for _, s in kept),
                line_numbers=tuple(n for n, _ in kept),
                has_figure=p.has_figure,
            )
        )
    return CleanDocument(
        doc_id=doc.doc_id,
        pages=tuple(pages),
        provenance=Provenance(
            header_footer=report, cover_pages=cover, blank_pages=blank, toc_pages=toc_pages
        ),
    )
