"""End-to-end extraction: page text in, formal requirements (concept, relation, property) out.

Configuration is an INI file::

    [meta]
    version = 1

    [preprocess]
    threshold = 5

    [segment]
    toc_max_pages = 5
    toc_min_ratio = 0.6
    toc_max_distance = 5

    [ner]
    engine = rules            ; rules | crf | union
    dictionary = dictionary.json
    rules = rules.json
    crf_model = crf.json
    numeric_filter = false

    [re]
    model = re_model.json     ; or train_corpus = corpus.jsonl
    kind = rf
    combination = 3
    params = {"n_estimators": 200, "max_depth": 30, "min_samples_split": 2}
    embeddings = vectors.txt
    parse_paths = paths.jsonl

    [split]
    seed = 0

Relative paths are resolved against the directory holding the config file;
omitted pack paths fall back to the packs shipped with the library.
"""

from __future__ import annotations

import configparser
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from specreq.annotations import (
    CONCEPT_LABELS,
    NO_RELATION,
    RELATION_PROPERTY,
    AnnotatedSample,
    EntitySpan,
    load_jsonl,
)
from specreq.docmodel import Document
from specreq.ner.crf import CrfModel, crf_predict
from specreq.ner.matchers import DictionaryPack, RulePack, dict_match, numeric_context_filter, rule_match
from specreq.preprocess import DEFAULT_THRESHOLD, CleanDocument, apply_preprocessing
from specreq.relations.features import ParsePaths, WordVectors
from specreq.relations.pairs import corpus_pairs, generate_pairs
from specreq.relations.search import DEFAULT_PARAMS, RelationModel, train_relation_model
from specreq.segment import (
    RawRequirement,
    SectionNode,
    StructureWarning,
    build_hierarchy,
    extract_raw_requirements,
    headlines,
    locate_toc,
)
from specreq.textproc import bilou_decode, tokenize

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
ENGINES = ("rules", "crf", "union")
OPERATORS = ("=", "≥", "≤", ">", "<")
_ASCII_OPERATORS = {">=": "≥", "<=": "≤"}


class ConfigError(ValueError):
    """The pipeline configuration is invalid or references missing files."""


class PipelineError(RuntimeError):
    def __init__(self, stage: str, ident: str, message: str):
        super().__init__(f"[{stage}] {ident}: {message}")
        self.stage = stage
        self.ident = ident


@dataclass
class PipelineConfig:
    base_dir: Path = field(default_factory=Path.cwd)
    threshold: int = DEFAULT_THRESHOLD
    toc_max_pages: int = 5
    toc_min_ratio: float = 0.6
    toc_max_distance: int = 5
    ner_engine: str = "rules"
    dictionary: Path | None = None
    rules: Path | None = None
    crf_model: Path | None = None
    numeric_filter: bool = False
    re_model: Path | None = None
    re_train_corpus: Path | None = None
    re_kind: str = "rf"
    re_combination: int = 3
    re_params: dict[str, Any] | None = None
    embeddings: Path | None = None
    parse_paths: Path | None = None
    seed: int = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        version = parser.getint("meta", "version", fallback=None)
        if version != CONFIG_VERSION:
            raise ConfigError(f"{path}: [meta] version must be {CONFIG_VERSION}, got {version}")
        base = path.resolve().parent

        def opt_path(section: str, key: str) -> Path | None:
            value = parser.get(section, key, fallback="").strip()
            return (base / value) if value else None

        try:
            params_raw = parser.get("re", "params", fallback="").strip()
            config = cls(
                base_dir=base,
                threshold=parser.getint("preprocess", "threshold", fallback=DEFAULT_THRESHOLD),
                toc_max_pages=parser.getint("segment", "toc_max_pages", fallback=5),
                toc_min_ratio=parser.getfloat("segment", "toc_min_ratio", fallback=0.6),
                toc_max_distance=parser.getint("segment", "toc_max_distance", fallback=5),
                ner_engine=parser.get("ner", "engine", fallback="rules").strip(),
                dictionary=opt_path("ner", "dictionary"),
                rules=opt_path("ner", "rules"),
                crf_model=opt_path("ner", "crf_model"),
                numeric_filter=parser.getboolean("ner", "numeric_filter", fallback=False),
                re_model=opt_path("re", "model"),
                re_train_corpus=opt_path("re", "train_corpus"),
                re_kind=parser.get("re", "kind", fallback="rf").strip(),
                re_combination=parser.getint("re", "combination", fallback=3),
                re_params=json.loads(params_raw) if params_raw else None,
                embeddings=opt_path("re", "embeddings"),
                parse_paths=opt_path("re", "parse_paths"),
                seed=parser.getint("split", "seed", fallback=0),
            )
        except (ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        config.validate()
        return config

    def validate(self) -> None:
        if self.ner_engine not in ENGINES:
            raise ConfigError(f"ner engine must be one of {ENGINES}, got {self.ner_engine!r}")
        if self.ner_engine in ("crf", "union") and self.crf_model is None:
            raise ConfigError(f"ner engine {self.ner_engine!r} needs crf_model")
        for name in ("dictionary", "rules", "crf_model", "re_model", "re_train_corpus", "embeddings", "parse_paths"):
            value = getattr(self, name)
            if value is not None and not Path(value).is_file():
                raise ConfigError(f"{name}: file not found: {value}")
        if not 1 <= self.re_combination <= 7:
            raise ConfigError(f"combination must be 1..7, got {self.re_combination}")


# ------------------------------------------------------------ documents


@dataclass
class SegmentationResult:
    clean: CleanDocument
    root: SectionNode
    requirements: list[RawRequirement]
    toc_region: tuple[int, int] | None

    @property
    def warnings(self) -> list[StructureWarning]:
        return self.root.warnings


def segment_document(doc: Document, config: PipelineConfig | None = None) -> SegmentationResult:
    """Clean, locate the TOC from a first structure pass, then clean and segment again."""
    config = config or PipelineConfig()
    first = apply_preprocessing(doc, None, threshold=config.threshold)
    toc = locate_toc(
        first,
        headlines(build_hierarchy(first)),
        max_pages=config.toc_max_pages,
        min_ratio=config.toc_min_ratio,
        max_distance=config.toc_max_distance,
    )
    clean = apply_preprocessing(doc, toc, threshold=config.threshold) if toc else first
    root = build_hierarchy(clean)
    return SegmentationResult(clean, root, extract_raw_requirements(root, doc.doc_id), toc)


# ------------------------------------------------------------ assembly


def parse_property_triplet(span: EntitySpan | str, label: str | None = None) -> tuple[str, str, str]:
    """Split a property surface into (name, operator, value) at its first comparison sign.

    Without one the name is the property label and the operator ``"none"``.
    """
    surface = span if isinstance(span, str) else span.surface
    label = label if label is not None else (span.label if isinstance(span, EntitySpan) else "")
    best: tuple[int, str, int] | None = None
    for op in list(_ASCII_OPERATORS) + list(OPERATORS):
        i = surface.find(op)
        if i >= 0 and (best is None or i < best[0]):
            best = (i, _ASCII_OPERATORS.get(op, op), len(op))
    if best is None:
        return label, "none", surface.strip()
    i, op, width = best
    return surface[:i].strip(), op, surface[i + width:].strip()


@dataclass
class FormalRelation:
    type: str
    property_label: str
    name: str
    operator: str
    value: str
    concept_span: tuple[int, int]
    property_span: tuple[int, int]

    def key(self) -> tuple[str, str, str, str]:
        return (self.type, self.name, self.operator, self.value)

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": self.type,
            "property": {
                "label": self.property_label,
                "name": self.name,
                "operator": self.operator,
                "value": self.value,
            },
            "provenance": {"concept": list(self.concept_span), "property": list(self.property_span)},
        }


@dataclass
class FormalRequirement:
    req_id: str
    concept_label: str
    concept_surface: str
    relations: list[FormalRelation]
    concept_spans: list[tuple[int, int]]
    title: str = ""
    hierarchy_path: list[str] = field(default_factory=list)
    source_lines: list[tuple[int, int]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "req_id": self.req_id,
            "concept": {"label": self.concept_label, "surface": self.concept_surface},
            "relations": [r.to_dict() for r in self.relations],
            "provenance": {
                "req_id": self.req_id,
                "title": self.title,
                "hierarchy_path": self.hierarchy_path,
                "concept_spans": [list(s) for s in self.concept_spans],
                "source_lines": [list(s) for s in self.source_lines],
            },
        }


def assemble_requirements(
    raw: RawRequirement,
    entities: Sequence[EntitySpan],
    predictions: Sequence[tuple[EntitySpan, EntitySpan, str]],
    warnings: list[str] | None = None,
) -> list[FormalRequirement]:
    """One requirement per distinct concept (label and folded surface) of a raw requirement.

    Relations predicted "0" are dropped, duplicates (same type and triplet)
    collapse, and a relation whose property label does not fit its type is
    rejected with a warning.
    """
    warnings = warnings if warnings is not None else []
    groups: dict[tuple[str, str], FormalRequirement] = {}
    for c in sorted((e for e in entities if e.label in CONCEPT_LABELS), key=lambda e: (e.start, e.end)):
        key = (c.label, c.surface.casefold())
        if key not in groups:
            groups[key] = FormalRequirement(
                req_id=raw.req_id,
                concept_label=c.label,
                concept_surface=c.surface,
                relations=[],
                concept_spans=[],
                title=raw.title,
                hierarchy_path=list(raw.hierarchy_path),
            )
        req = groups[key]
        req.concept_spans.append((c.start, c.end))
        src = raw.locate(c.start)
        if src is not None and (src.page_index, src.line_index) not in req.source_lines:
            req.source_lines.append((src.page_index, src.line_index))

    seen: dict[tuple[str, str], set[tuple[str, str, str, str]]] = {k: set() for k in groups}
    for concept, prop, rel_type in predictions:
        if rel_type == NO_RELATION:
            continue
        expected = RELATION_PROPERTY.get(rel_type)
        if expected != prop.label:
            warnings.append(
                f"{raw.req_id}: rejected {rel_type} from {concept.surface!r} to {prop.label} {prop.surface!r}"
            )
            continue
        key = (concept.label, concept.surface.casefold())
        name, op, value = parse_property_triplet(prop)
        relation = FormalRelation(
            rel_type, prop.label, name, op, value, (concept.start, concept.end), (prop.start, prop.end)
        )
        if relation.key() in seen[key]:
            continue
        seen[key].add(relation.key())
        groups[key].relations.append(relation)
    return list(groups.values())


# ------------------------------------------------------------ extractor


class NerEngine:
    def __init__(
        self,
        engine: str = "rules",
        dictionary: DictionaryPack | None = None,
        rules: RulePack | None = None,
        crf: CrfModel | None = None,
        numeric_filter: bool = False,
    ):
        if engine not in ENGINES:
            raise ConfigError(f"unknown NER engine {engine!r}")
        if engine in ("crf", "union") and crf is None:
            raise ConfigError(f"NER engine {engine!r} needs a CRF model")
        self.engine = engine
        self.dictionary = dictionary or DictionaryPack.default()
        self.rules = rules or RulePack.default()
        self.crf = crf
        self.numeric_filter = numeric_filter

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "NerEngine":
        return cls(
            config.ner_engine,
            DictionaryPack.load(config.dictionary) if config.dictionary else None,
            RulePack.load(config.rules) if config.rules else None,
            CrfModel.load(config.crf_model) if config.crf_model else None,
            config.numeric_filter,
        )

    def __call__(self, text: str) -> list[EntitySpan]:
        spans: list[EntitySpan] = []
        if self.engine in ("rules", "union"):
            spans += dict_match(text, self.dictionary) + rule_match(text, self.rules)
        if self.engine in ("crf", "union"):
            tokens = tokenize(text)
            spans += bilou_decode(tokens, crf_predict(self.crf, tokens), text=text)
        if self.numeric_filter:
            spans = numeric_context_filter(text, spans)
        unique = {s.key: s for s in spans}
        return [unique[k] for k in sorted(unique, key=lambda k: (k[0], k[1], k[2]))]


@dataclass
class ExtractionResult:
    doc_id: str
    requirements: list[FormalRequirement]
    raw_requirements: int
    toc_region: tuple[int, int] | None
    warnings: list[str] = field(default_factory=list)
    suppressed_duplicates: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "doc_id": self.doc_id,
            "raw_requirements": self.raw_requirements,
            "toc_region": list(self.toc_region) if self.toc_region else None,
            "requirements": [r.to_dict() for r in self.requirements],
            "suppressed_duplicates": self.suppressed_duplicates,
            "warnings": self.warnings,
        }


class Extractor:
    """Runs preprocess, segment, NER and relation classification for documents."""

    def __init__(self, config: PipelineConfig, ner: NerEngine | None = None, relation_model: RelationModel | None = None):
        self.config = config
        self.ner = ner or NerEngine.from_config(config)
        self.embeddings = WordVectors.load(config.embeddings) if config.embeddings else None
        self.parse_paths = ParsePaths.load(config.parse_paths) if config.parse_paths else None
        self.relation_model = relation_model or self._relation_model()

    def _relation_model(self) -> RelationModel:
        cfg = self.config
        if cfg.re_model is not None:
            return RelationModel.load(cfg.re_model, self.embeddings, self.parse_paths)
        if cfg.re_train_corpus is None:
            raise ConfigError("[re] needs either model or train_corpus")
        try:
            pairs = corpus_pairs(load_jsonl(cfg.re_train_corpus))
            params = cfg.re_params if cfg.re_params is not None else DEFAULT_PARAMS[cfg.re_kind]
            return train_relation_model(
                pairs, cfg.re_kind, params, cfg.re_combination, self.embeddings, self.parse_paths, cfg.seed
            )
        except ValueError as exc:
            raise PipelineError("train-re", str(cfg.re_train_corpus), str(exc)) from exc

    def extract(self, doc: Document) -> ExtractionResult:
        try:
            seg = segment_document(doc, self.config)
        except Exception as exc:
            raise PipelineError("segment", doc.doc_id, str(exc)) from exc
        warnings = [f"{w.kind}: {w.message}" for w in seg.warnings]
        out: list[FormalRequirement] = []
        emitted: set[tuple[str, str, str, str, str, str]] = set()
        suppressed = 0
        for raw in seg.requirements:
            try:
                entities = self.ner(raw.text)
            except Exception as exc:
                raise PipelineError("ner", raw.req_id, str(exc)) from exc
            sample = AnnotatedSample(id=raw.req_id, text=raw.text, title=raw.title)
            try:
                pairs = generate_pairs(sample, entities=entities)
                labels = self.relation_model.predict(pairs)
            except Exception as exc:
                raise PipelineError("re", raw.req_id, str(exc)) from exc
            predictions = [(p.concept, p.property, lab) for p, lab in zip(pairs, labels)]
            for req in assemble_requirements(raw, entities, predictions, warnings):
                kept = []
                for rel in req.relations:
                    key = (req.concept_label, req.concept_surface.casefold()) + rel.key()
                    if key in emitted:
                        suppressed += 1
                        continue
                    emitted.add(key)
                    kept.append(rel)
                if req.relations and not kept:
                    continue
                req.relations = kept
                out.append(req)
        return ExtractionResult(doc.doc_id, out, len(seg.requirements), seg.toc_region, warnings, suppressed)
