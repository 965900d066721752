"""Hierarchical segmentation from section numbering.

Headlines are recognized by their numbering (``1``, ``1.1``, ``II.3``,
``Article 4``...). The tree built from them drives two things: merging every
ancestor paragraph into each leaf section (a raw requirement), and
regenerating the table of contents so it can be located and removed.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

from specreq.preprocess import CleanDocument, within_distance

logger = logging.getLogger(__name__)

_LABEL_WORDS = r"chapitre|chapter|article|section|paragraphe|paragraph|partie|titre"
_ROMAN = r"(?=[IVX])X{0,3}(?:IX|IV|V?I{0,3})"
_COMPONENT = rf"(?:\d{{1,3}}|{_ROMAN})"
_NUMBER = rf"{_COMPONENT}(?:\.{_COMPONENT})*"
_HEADLINE_RE = re.compile(
    rf"^ {{0,3}}(?:(?P<label>(?i:{_LABEL_WORDS}))\s+)?(?P<number>{_NUMBER})\.?"
    rf"(?:(?:\s*[-–—:)]\s*|\s+)(?P<title>\S.*?))?\s*$"
)
MAX_TITLE_LENGTH = 150
_WORD_RE = re.compile(r"[^\W\d_](?:[^\W\d_]|['’-])*(?:\s|[.,:;]|$)")


@dataclass(frozen=True)
class HeadlineParts:
    number_token: str
    title: str
    level: int


@dataclass(frozen=True)
class Headline:
    raw_text: str
    number_token: str
    title: str
    level: int
    page_index: int
    line_index: int


def classify_headline(line: str) -> HeadlineParts | None:
    """Recognize a numbered headline; the level is the number of components.

    Without a label word the title must start with a capitalized word made
    of letters, which keeps lines such as ``"2 vantaux de 90 cm"`` or
    ``"1.46 W/m²°C"`` out.
    """
    m = _HEADLINE_RE.match(line.rstrip("\n"))
    if m is None:
        return None
    title = (m.group("title") or "").strip()
    label = m.group("label")
    if label is None and not (title and title[0].isupper() and _WORD_RE.match(title)):
        return None
    if len(title) > MAX_TITLE_LENGTH:
        return None
    number = m.group("number")
    return HeadlineParts(number_token=number, title=title, level=number.count(".") + 1)


@dataclass(frozen=True)
class LineRef:
    page_index: int
    line_index: int
    offset: int     # where the stripped line starts inside the paragraph text


@dataclass
class Paragraph:
    text: str
    sources: list[LineRef] = field(default_factory=list)

    def add_line(self, stripped: str, page_index: int, line_index: int) -> None:
        if self.text:
            self.text += " "
        self.sources.append(LineRef(page_index, line_index, len(self.text)))
        self.text += stripped


@dataclass
class StructureWarning:
    kind: str
    message: str
    page_index: int | None = None
    line_index: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "message": self.message,
            "page_index": self.page_index,
            "line_index": self.line_index,
        }


@dataclass
class SectionNode:
    headline: Headline | None = None
    paragraphs: list[Paragraph] = field(default_factory=list)
    children: list["SectionNode"] = field(default_factory=list)
    warnings: list[StructureWarning] = field(default_factory=list)

    @property
    def level(self) -> int:
        return self.headline.level if self.headline else 0

    @property
    def paragraph_texts(self) -> list[str]:
        return [p.text for p in self.paragraphs]

    def walk(self) -> Iterator["SectionNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


def _components(number_token: str) -> list[str]:
    return number_token.split(".")


def build_hierarchy(doc: CleanDocument) -> SectionNode:
    """Scan lines, open a node per headline, attach it under the open node one level up.

    The root collects structure warnings: level jumps attach to the deepest
    open ancestor, numbering that does not continue its parent is reported but
    kept where its level puts it.
    """
    root = SectionNode()
    open_nodes: dict[int, SectionNode] = {0: root}
    current = root
    paragraph: Paragraph | None = None
    headline_count = 0

    for page in doc.pages:
        for line, line_no in zip(page.lines, page.line_numbers):
            stripped = line.strip()
            if not stripped:
                paragraph = None
                continue
            parts = classify_headline(line)
            if parts is None:
                if paragraph is None:
                    paragraph = Paragraph("")
                    current.paragraphs.append(paragraph)
                paragraph.add_line(stripped, page.index, line_no)
                continue

            headline_count += 1
            headline = Headline(line, parts.number_token, parts.title, parts.level, page.index, line_no)
            parent_level = max(lvl for lvl in open_nodes if lvl < parts.level)
            parent = open_nodes[parent_level]
            if parent_level != parts.level - 1:
                root.warnings.append(
                    StructureWarning(
                        "level_jump",
                        f"{parts.number_token!r} (level {parts.level}) placed under level {parent_level}",
                        page.index,
                        line_no,
                    )
                )
            elif parent.headline is not None and (
                _components(parts.number_token)[:-1] != _components(parent.headline.number_token)
            ):
                root.warnings.append(
                    StructureWarning(
                        "numbering_inconsistency",
                        f"{parts.number_token!r} follows {parent.headline.number_token!r}",
                        page.index,
                        line_no,
                    )
                )
            node = SectionNode(headline=headline)
            parent.children.append(node)
            for lvl in [lvl for lvl in open_nodes if lvl >= parts.level]:
                del open_nodes[lvl]
            open_nodes[parts.level] = node
            current = node
            paragraph = None

    if headline_count == 0:
        root.warnings.append(StructureWarning("no_numbering", "no numbering system found"))
    return root


@dataclass(frozen=True)
class CharSpan:
    start: int
    end: int
    page_index: int
    line_index: int


@dataclass
class RawRequirement:
    req_id: str
    title: str
    hierarchy_path: list[str]
    text: str
    char_map: list[CharSpan] = field(default_factory=list)
    number_path: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "req_id": self.req_id,
            "title": self.title,
            "hierarchy_path": self.hierarchy_path,
            "number_path": self.number_path,
            "text": self.text,
            "char_map": [[c.start, c.end, c.page_index, c.line_index] for c in self.char_map],
        }

    def locate(self, offset: int) -> CharSpan | None:
        """The source line containing character ``offset`` of ``text``."""
        for span in self.char_map:
            if span.start <= offset < span.end:
                return span
        return None


def _assemble(req_id: str, chain: Sequence[SectionNode]) -> RawRequirement:
    parts: list[str] = []
    char_map: list[CharSpan] = []
    pos = 0
    for node in chain:
        for para in node.paragraphs:
            if parts:
                pos += 1    # newline separator
            bounds = [s.offset for s in para.sources[1:]] + [len(para.text)]
            for src, end in zip(para.sources, bounds):
                stop = end - 1 if end < len(para.text) else end
                char_map.append(CharSpan(pos + src.offset, pos + stop, src.page_index, src.line_index))
            parts.append(para.text)
            pos += len(para.text)
    headed = [n for n in chain if n.headline is not None]
    return RawRequirement(
        req_id=req_id,
        title=headed[-1].headline.title if headed else "",
        hierarchy_path=[n.headline.title for n in headed],
        number_path=[n.headline.number_token for n in headed],
        text="\n".join(parts),
        char_map=char_map,
    )


def extract_raw_requirements(root: SectionNode, doc_id: str = "doc") -> list[RawRequirement]:
    """One requirement per leaf section: ancestor paragraphs first, then its own."""
    chains: list[list[SectionNode]] = []

    def visit(node: SectionNode, chain: list[SectionNode]) -> None:
        chain = chain + [node]
        if not node.children:
            if node.headline is not None or node.paragraphs:
                chains.append(chain)
            return
        for child in node.children:
            visit(child, chain)

    visit(root, [])
    return [_assemble(f"{doc_id}#{i}", chain) for i, chain in enumerate(chains)]


def regenerate_toc(root: SectionNode) -> list[tuple[str, str]]:
    return [(n.headline.number_token, n.headline.title) for n in root.walk() if n.headline]


def headlines(root: SectionNode) -> list[Headline]:
    return [n.headline for n in root.walk() if n.headline]


_LEADER_RE = re.compile(r"(?:\s*[.…·_]){2,}\s*\d*\s*$")
_TRAILING_PAGE_RE = re.compile(r"\s+\d{1,4}\s*$")
_SPACES_RE = re.compile(r"\s+")


def normalize_toc_line(text: str) -> str:
    """Drop dot leaders and trailing page numbers, fold case and spaces."""
    text = _LEADER_RE.sub("", text.strip())
    text = _TRAILING_PAGE_RE.sub("", text)
    return _SPACES_RE.sub(" ", text).strip().casefold()


def locate_toc(
    doc: Any,
    toc_entries: Iterable[Headline | tuple[str, str]],
    max_pages: int = 5,
    min_ratio: float = 0.6,
    max_distance: int = 5,
    min_matches: int = 2,
) -> tuple[int, int] | None:
    """Find the contiguous run of early pages whose lines mostly list TOC entries.

    ``doc`` is anything with ``pages`` carrying ``index`` and ``lines``.
    Entries given as :class:`Headline` only match lines on other pages, so a
    page of headlines cannot vouch for itself. A line matches an entry within
    ``max_distance`` edits, and never more than a fifth of the entry's length.
    """
    candidates: list[tuple[str, int | None, int]] = []
    for entry in toc_entries:
        if isinstance(entry, Headline):
            number, title, page = entry.number_token, entry.title, entry.page_index
        else:
            number, title = entry[0], entry[1]
            page = None
        for form in (f"{number} {title}", title):
            norm = normalize_toc_line(form)
            if norm:
                candidates.append((norm, page, min(max_distance, len(norm) // 5)))

    def matches(line: str, page_index: int) -> bool:
        norm = normalize_toc_line(line)
        if not norm:
            return False
        return any(
            page != page_index and within_distance(norm, cand, limit)
            for cand, page, limit in candidates
        )

    qualifying = []
    for page in list(doc.pages)[:max_pages]:
        lines = [s for s in page.lines if s.strip()]
        hits = sum(matches(s, page.index) for s in lines)
        qualifying.append(bool(lines) and hits >= min_matches and hits / len(lines) >= min_ratio)

    pages = list(doc.pages)[:max_pages]
    run: list[int] = []
    for page, ok in zip(pages, qualifying):
        if ok:
            run.append(page.index)
        elif run:
            break
    if not run:
        return None
    return run[0], run[-1]
