"""Tokenization with offsets, sentence boundaries, POS tagging and the BILOU codec."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from specreq.annotations import EntitySpan


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int
    pos: str | None = None


# Decimal numbers stay whole, "×" glues compounds such as 100×220.
_UNIT = r"\d+(?:[.,]\d+)+|\w+"
_TOKEN_RE = re.compile(rf"(?:{_UNIT})(?:×(?:{_UNIT}))*|[^\w\s]")
_NUMBER_RE = re.compile(r"^\d+(?:[.,]\d+)*$")


def tokenize(text: str) -> list[Token]:
    """Split on whitespace; every punctuation character becomes its own token.

    >>> [t.surface for t in tokenize("d'une porte")]
    ['d', "'", 'une', 'porte']
    """
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)|\n+")


def sentence_boundaries(text: str) -> list[int]:
    """End offsets of the sentences in ``text`` (one per sentence)."""
    bounds = []
    last = 0
    for m in _SENTENCE_END_RE.finditer(text):
        if text[last : m.start()].strip():
            bounds.append(m.end())
        last = m.end()
    if text[last:].strip():
        bounds.append(len(text))
    return bounds


def sentences_between(bounds: Sequence[int], left_end: int, right_start: int) -> int:
    """Number of sentence boundaries falling between two character offsets."""
    return sum(1 for b in bounds if left_end <= b <= right_start)


def is_punctuation(surface: str) -> bool:
    return bool(surface) and not any(ch.isalnum() for ch in surface) and not surface.isspace()


# ---------------------------------------------------------------- POS tagging

_SUFFIX_RULES = (
    ("ment", "ADV"),
    ("tion", "NOUN"),
    ("sion", "NOUN"),
    ("eur", "NOUN"),
    ("age", "NOUN"),
    ("ure", "NOUN"),
    ("ité", "NOUN"),
    ("isme", "NOUN"),
    ("ique", "ADJ"),
    ("able", "ADJ"),
    ("ible", "ADJ"),
    ("eux", "ADJ"),
    ("euse", "ADJ"),
    ("ées", "ADJ"),
    ("ée", "ADJ"),
    ("és", "ADJ"),
    ("é", "ADJ"),
    ("ive", "ADJ"),
    ("er", "VERB"),
    ("ir", "VERB"),
)


class PosProvider(Protocol):
    def tag(self, tokens: Sequence[Token], key: object = None) -> list[Token]: ...


class LexiconTagger:
    """Lexicon lookup with digit/punctuation rules and a suffix fallback."""

    def __init__(self, lexicon: Mapping[str, str]):
        self.lexicon = {k.casefold(): v for k, v in lexicon.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "LexiconTagger":
        return cls(read_lexicon(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "LexiconTagger":
        return _default_tagger()

    def tag_word(self, surface: str) -> str:
        if not surface or surface.isspace():
            return "SPACE"
        if _NUMBER_RE.match(surface):
            return "NUM"
        if is_punctuation(surface):
            return "PUNCT"
        word = surface.casefold()
        if word in self.lexicon:
            return self.lexicon[word]
        if any(ch.isdigit() for ch in surface):
            return "PROPN"
        if len(word) > 3:
            for suffix, pos in _SUFFIX_RULES:
                if word.endswith(suffix):
                    return pos
        return "X"

    def tag(self, tokens: Sequence[Token], key: object = None) -> list[Token]:
        return [replace(t, pos=self.tag_word(t.surface)) for t in tokens]


class PrecomputedTagger:
    """Tags supplied per sample id; falls back to another provider otherwise."""

    def __init__(self, tags: Mapping[object, Sequence[str]], fallback: PosProvider | None = None):
        self.tags = {str(k): list(v) for k, v in tags.items()}
        self.fallback = fallback or LexiconTagger.default()

    @classmethod
    def from_jsonl(cls, path: str | Path, fallback: PosProvider | None = None) -> "PrecomputedTagger":
        tags = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    tags[rec["id"]] = rec["pos"]
        return cls(tags, fallback)

    def tag(self, tokens: Sequence[Token], key: object = None) -> list[Token]:
        given = self.tags.get(str(key))
        if given is None or len(given) != len(tokens):
            return self.fallback.tag(tokens, key)
        return [replace(t, pos=p) for t, p in zip(tokens, given)]


def read_lexicon(content: str) -> dict[str, str]:
    lexicon = {}
    for line in content.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        surface, pos = line.rstrip("\n").split("\t")[:2]
        lexicon[surface] = pos
    return lexicon


@lru_cache(maxsize=1)
def _default_tagger() -> LexiconTagger:
    content = resources.files("specreq").joinpath("data/lexicon_fr.tsv").read_text(encoding="utf-8")
    return LexiconTagger(read_lexicon(content))


def pos_tag(tokens: Sequence[Token], provider: PosProvider | None = None, key: object = None) -> list[Token]:
    return (provider or LexiconTagger.default()).tag(tokens, key)


# --------------------------------------------------------------------- BILOU


class AlignmentError(ValueError):
    """A span boundary falls inside a token."""


class OverlapError(ValueError):
    """More overlap than the extended tag scheme can represent."""


OUTSIDE = "O"
_COMPONENT_SPLIT = re.compile(r"_(?=[BILU]-)")


def parse_tag(tag: str) -> list[tuple[str, str]]:
    """``"I-Dimension_B-Fire_Resistance"`` -> ``[("I", "Dimension"), ("B", "Fire_Resistance")]``."""
    if tag == OUTSIDE:
        return []
    parts = []
    for comp in _COMPONENT_SPLIT.split(tag):
        prefix, sep, label = comp.partition("-")
        if not sep or prefix not in "BILU" or len(prefix) != 1 or not label:
            raise ValueError(f"malformed tag {tag!r}")
        parts.append((prefix, label))
    return parts


def tag_labels(tag: str) -> list[str]:
    return [label for _, label in parse_tag(tag)]


def open_after(tag: str) -> frozenset[str]:
    """Labels whose entity is still open after a token carrying ``tag``."""
    return frozenset(label for p, label in parse_tag(tag) if p in "BI")


def transition_allowed(prev: str | None, cur: str) -> bool:
    """Grammar check for a single step; ``prev=None`` means sequence start."""
    comps = parse_tag(cur)
    labels = [label for _, label in comps]
    if len(set(labels)) != len(labels):
        return False
    opened = open_after(prev) if prev is not None else frozenset()
    continuing = {label for p, label in comps if p in "IL"}
    starting = {label for p, label in comps if p in "BU"}
    return continuing == opened and not (starting & opened)


def end_allowed(last: str | None) -> bool:
    return last is None or not open_after(last)


def grammar_violations(tags: Sequence[str]) -> list[int]:
    """Positions where the tag sequence breaks the BILOU grammar (``len(tags)`` = unclosed end)."""
    bad = []
    prev = None
    for i, tag in enumerate(tags):
        if not transition_allowed(prev, tag):
            bad.append(i)
        prev = tag
    if tags and not end_allowed(tags[-1]):
        bad.append(len(tags))
    return bad


def is_valid_sequence(tags: Sequence[str]) -> bool:
    return not grammar_violations(tags)


def _token_range(tokens: Sequence[Token], span: EntitySpan) -> tuple[int, int]:
    first = last = None
    for i, tok in enumerate(tokens):
        if tok.start == span.start:
            first = i
        if tok.end == span.end:
            last = i
            break
    if first is None or last is None or last < first:
        raise AlignmentError(
            f"span {span.label} {span.start}-{span.end} {span.surface!r} is not aligned to token boundaries"
        )
    return first, last


def bilou_encode(tokens: Sequence[Token], spans: Iterable[EntitySpan]) -> list[str]:
    """Tag tokens with BILOU; two overlapping spans give ``primary_secondary`` tags.

    The longer span (in characters) is primary; ties go to the earlier start.
    """
    unique = sorted(set(spans), key=lambda s: (-(s.end - s.start), s.start, s.label))
    ranges = [_token_range(tokens, s) for s in unique]
    covering: list[list[int]] = [[] for _ in tokens]
    for rank, (first, last) in enumerate(ranges):
        for i in range(first, last + 1):
            covering[i].append(rank)

    tags = []
    for i, ranks in enumerate(covering):
        if len(ranks) > 2:
            labels = ", ".join(unique[r].label for r in ranks)
            raise OverlapError(f"token {tokens[i].surface!r} is covered by {len(ranks)} spans ({labels})")
        if len(ranks) == 2 and unique[ranks[0]].label == unique[ranks[1]].label:
            raise OverlapError(f"overlapping spans share label {unique[ranks[0]].label!r}")
        comps = []
        for r in ranks:
            first, last = ranges[r]
            if first == last:
                prefix = "U"
            elif i == first:
                prefix = "B"
            elif i == last:
                prefix = "L"
            else:
                prefix = "I"
            comps.append(f"{prefix}-{unique[r].label}")
        tags.append("_".join(comps) if comps else OUTSIDE)
    return tags


def bilou_decode(
    tokens: Sequence[Token],
    tags: Sequence[str],
    text: str | None = None,
    notes: list[str] | None = None,
) -> list[EntitySpan]:
    """Recover spans from a tag sequence.

    Malformed runs are repaired leniently (an orphan ``I``/``L`` opens a span,
    an unterminated ``B``/``I`` closes at the previous token); each repair is
    appended to ``notes`` when given.
    """
    if len(tokens) != len(tags):
        raise ValueError(f"{len(tokens)} tokens but {len(tags)} tags")
    repairs = notes if notes is not None else []
    opened: dict[str, int] = {}
    found: list[tuple[str, int, int]] = []

    def close(label: str, last: int) -> None:
        found.append((label, opened.pop(label), last))

    for i, tag in enumerate(tags):
        comps = parse_tag(tag)
        present = {label for _, label in comps}
        for label in [lab for lab in opened if lab not in present]:
            repairs.append(f"token {i}: {label} not closed before {tag!r}")
            close(label, i - 1)
        for prefix, label in comps:
            if prefix in "BU" and label in opened:
                repairs.append(f"token {i}: {prefix}-{label} inside an open {label}")
                close(label, i - 1)
            if prefix in "IL" and label not in opened:
                repairs.append(f"token {i}: {prefix}-{label} without B-{label}")
                opened[label] = i
            if prefix in "BU":
                opened[label] = i
            if prefix in "LU":
                close(label, i)
    for label in list(opened):
        repairs.append(f"end: {label} not closed")
        close(label, len(tokens) - 1)

    spans = []
    for label, first, last in found:
        start, end = tokens[first].start, tokens[last].end
        surface = text[start:end] if text is not None else ""
        spans.append(EntitySpan(label, start, end, surface=surface))
    return sorted(spans, key=lambda s: (s.start, s.end, s.label))
