"""Doccano-style JSONL annotation corpus: loading, saving, splitting, statistics."""

from __future__ import annotations

import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

CONCEPT_LABELS = (
    "Door_Assembly",
    "Bay",
    "Window",
    "Joinery",
    "Window_Sash",
    "Door",
    "French_Door",
)
PROPERTY_LABELS = (
    "Number_of_Leaf",
    "Acoustic_Attenuation",
    "Dimension",
    "Fire_Resistance",
    "Flame_Arrester",
    "Thermic_Coefficient",
    "Air_Permeability",
    "Watertight",
    "Wind_Resistance",
)
ENTITY_LABELS = CONCEPT_LABELS + PROPERTY_LABELS

# relation type -> property label it must point at
RELATION_PROPERTY = {
    "hasDimension": "Dimension",
    "hasThermicCoefficient": "Thermic_Coefficient",
    "hasAcousticAttenuation": "Acoustic_Attenuation",
    "hasFlameArrester": "Flame_Arrester",
    "hasFireResistance": "Fire_Resistance",
    "hasAirPermeability": "Air_Permeability",
    "hasWatertight": "Watertight",
    "hasWindResistance": "Wind_Resistance",
    "hasNumberOfLeaf": "Number_of_Leaf",
}
RELATION_TYPES = tuple(RELATION_PROPERTY)
NO_RELATION = "0"


class AnnotationError(ValueError):
    """A JSONL line violates the annotation schema."""


@dataclass(frozen=True)
class EntitySpan:
    label: str
    start: int
    end: int
    surface: str = field(default="", compare=False)
    id: Any = field(default=None, compare=False)

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.label)


@dataclass(frozen=True)
class RelationAnnotation:
    id: Any
    from_id: Any
    to_id: Any
    type: str


@dataclass
class AnnotatedSample:
    id: Any
    text: str
    entities: list[EntitySpan] = field(default_factory=list)
    relations: list[RelationAnnotation] = field(default_factory=list)
    title: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    def entity(self, entity_id: Any) -> EntitySpan:
        for e in self.entities:
            if e.id == entity_id:
                return e
        raise KeyError(entity_id)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "text": self.text}
        if self.title:
            out["title"] = self.title
        out.update(self.extra)
        out["entities"] = [
            {"id": e.id, "label": e.label, "start_offset": e.start, "end_offset": e.end}
            for e in self.entities
        ]
        out["relations"] = [
            {"id": r.id, "from_id": r.from_id, "to_id": r.to_id, "type": r.type}
            for r in self.relations
        ]
        return out


def sample_from_dict(record: dict[str, Any], line_no: int | None = None) -> AnnotatedSample:
    where = f"line {line_no}: " if line_no is not None else ""
    try:
        text = record["text"]
        sample_id = record["id"]
    except KeyError as exc:
        raise AnnotationError(f"{where}missing field {exc}") from None
    if not isinstance(text, str):
        raise AnnotationError(f"{where}text must be a string")

    entities = []
    for raw in record.get("entities") or []:
        start, end = raw.get("start_offset"), raw.get("end_offset")
        if not (isinstance(start, int) and isinstance(end, int)) or not 0 <= start < end <= len(text):
            raise AnnotationError(
                f"{where}entity {raw.get('id')!r} has offsets {start}-{end} "
                f"outside text of length {len(text)}"
            )
        entities.append(
            EntitySpan(raw["label"], start, end, surface=text[start:end], id=raw.get("id"))
        )

    known = {e.id for e in entities}
    relations = []
    for raw in record.get("relations") or []:
        for end_key in ("from_id", "to_id"):
            if raw.get(end_key) not in known:
                raise AnnotationError(
                    f"{where}relation {raw.get('id')!r} references unknown entity "
                    f"{raw.get(end_key)!r}"
                )
        relations.append(RelationAnnotation(raw.get("id"), raw["from_id"], raw["to_id"], raw["type"]))

    extra = {
        k: v
        for k, v in record.items()
        if k not in ("id", "text", "title", "entities", "relations")
    }
    return AnnotatedSample(
        id=sample_id,
        text=text,
        entities=entities,
        relations=relations,
        title=record.get("title", "") or "",
        extra=extra,
    )


def load_jsonl(path: str | Path) -> list[AnnotatedSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AnnotationError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            samples.append(sample_from_dict(record, line_no))
    return samples


def save_jsonl(samples: Iterable[AnnotatedSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_dict(), ensure_ascii=False) + "\n")


@dataclass
class CorpusSplit:
    train: list[AnnotatedSample]
    validation: list[AnnotatedSample]
    test: list[AnnotatedSample]
    seed: int

    def parts(self) -> dict[str, list[AnnotatedSample]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}


def split_sizes(n: int) -> tuple[int, int, int]:
    n_train = (7 * n) // 10
    n_val = (2 * n) // 10
    return n_train, n_val, n - n_train - n_val


def split_corpus(
    samples: Sequence[AnnotatedSample], seed: int, stratify: str | None = None
) -> CorpusSplit:
    """Seeded 70/20/10 split by sample.

    With ``stratify``, samples are grouped on whether they contain an entity
    of that label and each group is sliced separately.
    """
    n = len(samples)
    if n < 10:
        raise ValueError(f"need at least 10 samples to split, got {n}")
    rng = random.Random(seed)
    if stratify is None:
        order = list(samples)
        rng.shuffle(order)
        a, b, _ = split_sizes(n)
        return CorpusSplit(order[:a], order[a : a + b], order[a + b :], seed)

    groups: dict[bool, list[AnnotatedSample]] = defaultdict(list)
    for s in samples:
        groups[any(e.label == stratify for e in s.entities)].append(s)
    train, val, test = [], [], []
    for key in (True, False):
        group = groups.get(key, [])
        rng.shuffle(group)
        a, b, _ = split_sizes(len(group))
        train += group[:a]
        val += group[a : a + b]
        test += group[a + b :]
    return CorpusSplit(train, val, test, seed)


def label_histogram(samples: Iterable[AnnotatedSample]) -> dict[str, int]:
    """Counts of entity labels and relation types."""
    counts: Counter[str] = Counter()
    for s in samples:
        counts.update(e.label for e in s.entities)
        counts.update(r.type for r in s.relations)
    return dict(counts)


def split_histograms(split: CorpusSplit) -> dict[str, dict[str, int]]:
    return {name: label_histogram(part) for name, part in split.parts().items()}
