"""Candidate (concept, property) pairs within one annotated sample."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from specreq.annotations import CONCEPT_LABELS, NO_RELATION, PROPERTY_LABELS, AnnotatedSample, EntitySpan
from specreq.textproc import PosProvider, Token, pos_tag, sentence_boundaries, tokenize


@dataclass(frozen=True)
class SampleContext:
    """Text-level material shared by every pair of one sample."""

    sample_id: Any
    text: str
    tokens: tuple[Token, ...]
    sentence_ends: tuple[int, ...]
    title: str = ""

    @classmethod
    def build(cls, sample: AnnotatedSample, tagger: PosProvider | None = None) -> "SampleContext":
        tokens = pos_tag(tokenize(sample.text), tagger, key=sample.id)
        return cls(
            sample_id=sample.id,
            text=sample.text,
            tokens=tuple(tokens),
            sentence_ends=tuple(sentence_boundaries(sample.text)),
            title=sample.title,
        )

    def tokens_in(self, start: int, end: int) -> list[Token]:
        return [t for t in self.tokens if t.start >= start and t.end <= end]


@dataclass(frozen=True)
class RelationInstance:
    sample_id: Any
    concept: EntitySpan
    property: EntitySpan
    label: str
    context: SampleContext

    def __post_init__(self) -> None:
        if self.concept.label not in CONCEPT_LABELS:
            raise ValueError(f"{self.concept.label!r} is not a concept label")
        if self.property.label not in PROPERTY_LABELS:
            raise ValueError(f"{self.property.label!r} is not a property label")


def generate_pairs(
    sample: AnnotatedSample,
    tagger: PosProvider | None = None,
    entities: list[EntitySpan] | None = None,
) -> list[RelationInstance]:
    """Every concept x property pair of the sample, in text order.

    Labels come from the sample's relation annotations ("0" when none links
    the pair). ``entities`` overrides the sample's spans, e.g. with NER output,
    in which case every pair is labelled "0".
    """
    spans = sample.entities if entities is None else entities
    concepts = sorted((e for e in spans if e.label in CONCEPT_LABELS), key=lambda e: (e.start, e.end))
    properties = sorted((e for e in spans if e.label in PROPERTY_LABELS), key=lambda e: (e.start, e.end))
    if not concepts or not properties:
        return []
    gold: dict[tuple[Any, Any], str] = {}
    if entities is None:
        gold = {(r.from_id, r.to_id): r.type for r in sample.relations}
    context = SampleContext.build(sample, tagger)
    return [
        RelationInstance(
            sample_id=sample.id,
            concept=c,
            property=p,
            label=gold.get((c.id, p.id), NO_RELATION) if c.id is not None else NO_RELATION,
            context=context,
        )
        for c in concepts
        for p in properties
    ]


def corpus_pairs(samples, tagger: PosProvider | None = None) -> list[RelationInstance]:
    out: list[RelationInstance] = []
    for sample in samples:
        out.extend(generate_pairs(sample, tagger))
    return out
