"""Feature vectors for relation classification and the seven feature combinations.

Blocks (name -> content):

* ``labels``: one-hot concept label and property label
* ``pos``: one-hot POS of the first token of each entity
* ``word_count`` / ``sentence_count`` / ``punctuation``: counts between the two
  entities, z-scored with training statistics
* ``orientation``: 1.0 when the concept comes before the property
* ``parse_path``: one-hot dependency path between the entities (provider)
* ``between_embedding`` / ``span_embedding`` / ``title_embedding``: averaged
  word vectors (provider)

Categorical vocabularies are frozen at :meth:`RelationFeaturizer.fit`; values
unseen there go to an ``OTHER`` slot.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from specreq.relations.pairs import RelationInstance
from specreq.textproc import Token, is_punctuation, sentences_between, tokenize

logger = logging.getLogger(__name__)

BASE_BLOCKS = ("labels", "pos", "word_count", "sentence_count", "punctuation", "orientation")
COMBINATIONS: dict[int, tuple[str, ...]] = {
    1: ("labels", "pos"),
    2: ("labels", "pos", "word_count", "sentence_count", "punctuation"),
    3: BASE_BLOCKS,
    4: BASE_BLOCKS + ("parse_path",),
    5: BASE_BLOCKS + ("between_embedding",),
    6: BASE_BLOCKS + ("span_embedding",),
    7: BASE_BLOCKS + ("title_embedding",),
}
EMBEDDING_BLOCKS = frozenset({"between_embedding", "span_embedding", "title_embedding"})
COUNT_BLOCKS = ("word_count", "sentence_count", "punctuation")
OTHER = "OTHER"


class FeatureConfigError(ValueError):
    """A combination needs a provider that is not configured."""


class WordVectors:
    """Word-vector lookup read from the ``word v1 ... vD`` text format."""

    def __init__(self, vectors: Mapping[str, Sequence[float]]):
        if not vectors:
            raise ValueError("empty word-vector table")
        self._vectors = {w: np.asarray(v, dtype=float) for w, v in vectors.items()}
        dims = {v.shape[0] for v in self._vectors.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent vector sizes: {sorted(dims)}")
        self.dim = dims.pop()
        self.lookups = 0
        self.misses = 0

    @classmethod
    def load(cls, path: str | Path) -> "WordVectors":
        vectors: dict[str, list[float]] = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                parts = line.rstrip("\n").split(" ")
                if not parts or not parts[0]:
                    continue
                if line_no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                    continue    # "count dim" header
                try:
                    vectors[parts[0]] = [float(x) for x in parts[1:]]
                except ValueError:
                    raise ValueError(f"{path}:{line_no}: non-numeric vector component") from None
        return cls(vectors)

    def vector(self, word: str) -> np.ndarray:
        self.lookups += 1
        vec = self._vectors.get(word)
        if vec is None:
            vec = self._vectors.get(word.lower())
        if vec is None:
            self.misses += 1
            return np.zeros(self.dim)
        return vec

    def average(self, words: Sequence[str]) -> np.ndarray:
        """Mean vector; out-of-vocabulary words count as zero vectors."""
        if not words:
            return np.zeros(self.dim)
        return np.mean([self.vector(w) for w in words], axis=0)


class ParsePaths:
    """Dependency-path strings per (sample, concept span, property span).

    Sidecar JSONL lines: ``{"id": ..., "from": [start, end], "to": [start, end], "path": "..."}``.
    """

    MISSING = "NONE"

    def __init__(self, paths: Mapping[tuple[Any, int, int, int, int], str]):
        self._paths = dict(paths)

    @classmethod
    def load(cls, path: str | Path) -> "ParsePaths":
        paths = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    key = (rec["id"], *rec["from"], *rec["to"])
                    paths[key] = rec["path"]
        return cls(paths)

    def path(self, instance: RelationInstance) -> str:
        key = (instance.sample_id, instance.concept.start, instance.concept.end,
               instance.property.start, instance.property.end)
        return self._paths.get(key, self.MISSING)


def _first_pos(tokens: Sequence[Token]) -> str:
    return (tokens[0].pos or "X") if tokens else "X"


def raw_features(instance: RelationInstance) -> dict[str, Any]:
    """Uncoded syntactic features of a pair (before one-hot and scaling)."""
    ctx = instance.context
    c, p = instance.concept, instance.property
    left, right = (c, p) if c.start <= p.start else (p, c)
    between = ctx.tokens_in(left.end, right.start)
    puncts = sum(1 for t in between if is_punctuation(t.surface))
    return {
        "concept_label": c.label,
        "property_label": p.label,
        "concept_pos": _first_pos(ctx.tokens_in(c.start, c.end)),
        "property_pos": _first_pos(ctx.tokens_in(p.start, p.end)),
        "word_count": len(between) - puncts,
        "sentence_count": sentences_between(ctx.sentence_ends, left.end, right.start),
        "punctuation": puncts,
        "orientation": "before" if c.start < p.start else "after",
    }


def _words(tokens: Iterable[Token]) -> list[str]:
    return [t.surface for t in tokens if not is_punctuation(t.surface)]


@dataclass
class RelationFeaturizer:
    combination: int = 3
    embeddings: WordVectors | None = None
    parse_paths: ParsePaths | None = None
    vocab: dict[str, list[str]] = field(default_factory=dict)
    means: dict[str, float] = field(default_factory=dict)
    stds: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.combination not in COMBINATIONS:
            raise FeatureConfigError(f"combination must be 1..7, got {self.combination}")
        missing = self.missing_providers(self.combination, self.embeddings, self.parse_paths)
        if missing:
            raise FeatureConfigError(f"combination {self.combination} needs provider(s): {', '.join(missing)}")

    @staticmethod
    def missing_providers(combination: int, embeddings: Any, parse_paths: Any) -> list[str]:
        blocks = COMBINATIONS[combination]
        missing = []
        if "parse_path" in blocks and parse_paths is None:
            missing.append("parse_paths")
        if EMBEDDING_BLOCKS & set(blocks) and embeddings is None:
            missing.append("embeddings")
        return missing

    @property
    def blocks(self) -> tuple[str, ...]:
        return COMBINATIONS[self.combination]

    @property
    def fitted(self) -> bool:
        return bool(self.vocab)

    def fit(self, instances: Sequence[RelationInstance]) -> "RelationFeaturizer":
        if not instances:
            raise ValueError("cannot fit features on zero instances")
        raws = [raw_features(i) for i in instances]
        categorical = ["concept_label", "property_label", "concept_pos", "property_pos"]
        self.vocab = {key: sorted({r[key] for r in raws}) for key in categorical}
        if "parse_path" in self.blocks:
            self.vocab["parse_path"] = sorted({self.parse_paths.path(i) for i in instances})
        for key in COUNT_BLOCKS:
            values = np.array([r[key] for r in raws], dtype=float)
            self.means[key] = float(values.mean())
            std = float(values.std())
            self.stds[key] = std if std > 0 else 1.0
        return self

    def _onehot(self, key: str, value: str) -> list[float]:
        vocab = self.vocab[key]
        vec = [0.0] * (len(vocab) + 1)
        vec[vocab.index(value) if value in vocab else len(vocab)] = 1.0
        return vec

    def manifest(self) -> list[str]:
        """Feature names, aligned with the columns of :meth:`transform`."""
        if not self.fitted:
            raise ValueError("featurizer is not fitted")
        names: list[str] = []

        def onehot_names(block: str, key: str, role: str) -> None:
            names.extend(f"{block}:{role}={v}" for v in self.vocab[key] + [OTHER])

        for block in self.blocks:
            if block == "labels":
                onehot_names(block, "concept_label", "concept")
                onehot_names(block, "property_label", "property")
            elif block == "pos":
                onehot_names(block, "concept_pos", "concept")
                onehot_names(block, "property_pos", "property")
            elif block in COUNT_BLOCKS or block == "orientation":
                names.append(f"{block}:value")
            elif block == "parse_path":
                onehot_names(block, "parse_path", "path")
            elif block == "span_embedding":
                names.extend(f"{block}:concept[{d}]" for d in range(self.embeddings.dim))
                names.extend(f"{block}:property[{d}]" for d in range(self.embeddings.dim))
            else:
                names.extend(f"{block}[{d}]" for d in range(self.embeddings.dim))
        return names

    def manifest_blocks(self) -> list[str]:
        """Distinct block names in manifest order."""
        seen: dict[str, None] = {}
        for name in self.manifest():
            seen.setdefault(name.split(":")[0].split("[")[0], None)
        return list(seen)

    def featurize(self, instance: RelationInstance) -> np.ndarray:
        if not self.fitted:
            raise ValueError("featurizer is not fitted")
        raw = raw_features(instance)
        ctx = instance.context
        out: list[float] = []
        for block in self.blocks:
            if block == "labels":
                out += self._onehot("concept_label", raw["concept_label"])
                out += self._onehot("property_label", raw["property_label"])
            elif block == "pos":
                out += self._onehot("concept_pos", raw["concept_pos"])
                out += self._onehot("property_pos", raw["property_pos"])
            elif block in COUNT_BLOCKS:
                out.append((raw[block] - self.means[block]) / self.stds[block])
            elif block == "orientation":
                out.append(1.0 if raw["orientation"] == "before" else 0.0)
            elif block == "parse_path":
                out += self._onehot("parse_path", self.parse_paths.path(instance))
            elif block == "between_embedding":
                c, p = instance.concept, instance.property
                left, right = (c, p) if c.start <= p.start else (p, c)
                out += list(self.embeddings.average(_words(ctx.tokens_in(left.end, right.start))))
            elif block == "span_embedding":
                for span in (instance.concept, instance.property):
                    out += list(self.embeddings.average(_words(ctx.tokens_in(span.start, span.end))))
            elif block == "title_embedding":
                out += list(self.embeddings.average(_words(tokenize(ctx.title))))
        return np.asarray(out, dtype=float)

    def transform(self, instances: Sequence[RelationInstance]) -> np.ndarray:
        if not instances:
            return np.zeros((0, len(self.manifest())))
        return np.vstack([self.featurize(i) for i in instances])

    def fit_transform(self, instances: Sequence[RelationInstance]) -> np.ndarray:
        return self.fit(instances).transform(instances)

    def to_dict(self) -> dict[str, Any]:
        return {
            "combination": self.combination,
            "vocab": self.vocab,
            "means": self.means,
            "stds": self.stds,
        }

    @classmethod
    def from_dict(
        cls,
        data: Mapping[str, Any],
        embeddings: WordVectors | None = None,
        parse_paths: ParsePaths | None = None,
    ) -> "RelationFeaturizer":
        return cls(
            combination=int(data["combination"]),
            embeddings=embeddings,
            parse_paths=parse_paths,
            vocab={k: list(v) for k, v in data["vocab"].items()},
            means=dict(data["means"]),
            stds=dict(data["stds"]),
        )
