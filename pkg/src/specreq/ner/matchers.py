"""Dictionary (concepts) and regular-expression (properties) entity matchers."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from specreq.annotations import EntitySpan


class PackError(ValueError):
    """A dictionary or rule pack cannot be loaded."""


def fold_with_offsets(text: str, casefold: bool = True) -> tuple[str, list[int], list[int]]:
    """NFC-normalize (and case-fold) ``text`` keeping a map back to original offsets.

    Returns the folded string plus, for each folded character, the start and
    end offset of the original character cluster it came from.
    """
    folded: list[str] = []
    starts: list[int] = []
    ends: list[int] = []
    i = 0
    n = len(text)
    while i < n:
        j = i + 1
        while j < n and unicodedata.combining(text[j]):
            j += 1
        piece = unicodedata.normalize("NFC", text[i:j])
        if casefold:
            piece = piece.casefold()
        for ch in piece:
            folded.append(ch)
            starts.append(i)
            ends.append(j)
        i = j
    return "".join(folded), starts, ends


def _fold(text: str) -> str:
    return unicodedata.normalize("NFC", text).casefold()


@dataclass
class DictionaryPack:
    forms: dict[str, list[str]]

    def __post_init__(self) -> None:
        for label, forms in self.forms.items():
            if any(not f.strip() for f in forms):
                raise PackError(f"dictionary label {label!r} has an empty surface form")

    @classmethod
    def load(cls, path: str | Path) -> "DictionaryPack":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "DictionaryPack":
        return cls(json.loads(_data_text("dictionary.json")))

    def to_dict(self) -> dict[str, list[str]]:
        return self.forms


def _data_text(name: str) -> str:
    return resources.files("specreq").joinpath(f"data/{name}").read_text(encoding="utf-8")


def _form_pattern(form: str) -> str:
    parts = [re.escape(p) for p in re.split(r"[\s\-]+", _fold(form).strip()) if p]
    return r"(?<!\w)" + r"[\s\-]+".join(parts) + r"(?!\w)"


def _resolve_longest(matches: Sequence[tuple[int, int, int, str]]) -> list[tuple[int, int, str]]:
    """Greedy left-to-right selection; longest wins, then lowest rank."""
    ordered = sorted(matches, key=lambda m: (m[0], -(m[1] - m[0]), m[2]))
    chosen: list[tuple[int, int, str]] = []
    taken_until = -1
    for start, end, _, label in ordered:
        if start >= taken_until:
            chosen.append((start, end, label))
            taken_until = end
    return chosen


def dict_match(text: str, pack: DictionaryPack) -> list[EntitySpan]:
    """Whole-token, case-insensitive matches of the pack's surface forms.

    Overlaps are resolved left to right keeping the longest match; equal
    lengths go to the label listed first in the pack.
    """
    folded, starts, ends = fold_with_offsets(text)
    found = []
    for rank, (label, forms) in enumerate(pack.forms.items()):
        for form in forms:
            for m in re.finditer(_form_pattern(form), folded):
                found.append((m.start(), m.end(), rank, label))
    spans = []
    for start, end, label in _resolve_longest(found):
        o_start, o_end = starts[start], ends[end - 1]
        spans.append(EntitySpan(label, o_start, o_end, surface=text[o_start:o_end]))
    return spans


_BACKREF_RE = re.compile(r"\\[1-9]|\(\?P=|\\g<")


@dataclass
class RulePack:
    patterns: dict[str, list[str]]

    def __post_init__(self) -> None:
        self._compiled: dict[str, list[re.Pattern[str]]] = {}
        for label, patterns in self.patterns.items():
            compiled = []
            for pattern in patterns:
                if _BACKREF_RE.search(pattern):
                    raise PackError(f"{label}: backreferences are not allowed in {pattern!r}")
                try:
                    compiled.append(
                        re.compile(rf"(?<!\w)(?:{pattern})(?!\w)", re.IGNORECASE)
                    )
                except re.error as exc:
                    raise PackError(f"{label}: pattern {pattern!r} does not compile ({exc})") from None
            self._compiled[label] = compiled

    @classmethod
    def load(cls, path: str | Path) -> "RulePack":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def default(cls) -> "RulePack":
        return cls(json.loads(_data_text("rules.json")))

    def without(self, label: str) -> "RulePack":
        return RulePack({k: v for k, v in self.patterns.items() if k != label})

    def compiled(self, label: str) -> list[re.Pattern[str]]:
        return self._compiled[label]

    def to_dict(self) -> dict[str, list[str]]:
        return self.patterns


def rule_match(text: str, pack: RulePack) -> list[EntitySpan]:
    """Every pattern match becomes a property span; same-label overlaps keep the longest."""
    normalized, starts, ends = fold_with_offsets(text, casefold=False)
    spans = []
    for rank, label in enumerate(pack.patterns):
        found = []
        for pattern in pack.compiled(label):
            for m in pattern.finditer(normalized):
                if m.end() > m.start():
                    found.append((m.start(), m.end(), rank, label))
        for start, end, lab in _resolve_longest(found):
            o_start, o_end = starts[start], ends[end - 1]
            spans.append(EntitySpan(lab, o_start, o_end, surface=text[o_start:o_end]))
    return sorted(spans, key=lambda s: (s.start, s.end, s.label))


_DIGIT_RE = re.compile(r"\d")
_SENTENCE_STOP_RE = re.compile(r"[.!?](?=\s|$)|\n")


def numeric_context_filter(
    text: str,
    spans: Sequence[EntitySpan],
    labels: Mapping[str, Sequence[str]] | None = None,
) -> list[EntitySpan]:
    """Drop ambiguous concept matches whose sentence carries no number.

    ``labels`` maps a concept label to the folded surfaces to check; by default
    only ``Door`` spans reading ``porte``/``portes``, which are also forms of
    the verb *porter*.
    """
    labels = labels or {"Door": ("porte", "portes")}
    kept = []
    for span in spans:
        surfaces = labels.get(span.label)
        if surfaces and _fold(span.surface) in surfaces:
            left = max((m.end() for m in _SENTENCE_STOP_RE.finditer(text, 0, span.start)), default=0)
            stop = _SENTENCE_STOP_RE.search(text, span.end)
            right = stop.start() if stop else len(text)
            if not _DIGIT_RE.search(text[left:right]):
                continue
        kept.append(span)
    return kept
