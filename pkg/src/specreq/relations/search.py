"""Model construction, persistence, grid search and the feature-combination sweep."""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from specreq.annotations import NO_RELATION, RELATION_TYPES, AnnotatedSample
from specreq.evaluation import MetricsReport, classification_report, wide_table
from specreq.relations.features import COMBINATIONS, ParsePaths, RelationFeaturizer, WordVectors
from specreq.relations.forest import RandomForest
from specreq.relations.knn import KNeighbors
from specreq.relations.pairs import RelationInstance, corpus_pairs
from specreq.relations.svm import SupportVectorMachine
from specreq.relations.tree import DecisionTree
from specreq.textproc import PosProvider

logger = logging.getLogger(__name__)

MODEL_FORMAT = "specreq-re/1"
SKIPPED = "skipped: provider missing"

_CLASSES = {
    "dt": DecisionTree,
    "rf": RandomForest,
    "knn": KNeighbors,
    "svm": SupportVectorMachine,
}
_SEEDED = {"dt", "rf", "svm"}

# explored values per model kind; "all" stands in for the legacy "auto"
PARAM_GRIDS: dict[str, dict[str, list[Any]]] = {
    "svm": {"C": [0.1, 1, 10], "gamma": [0.001, 0.01, 0.1, "auto", "scale"]},
    "rf": {"n_estimators": [50, 100, 200], "max_depth": [10, 20, 30], "min_samples_split": [2, 5, 10]},
    "dt": {
        "criterion": ["gini", "entropy"],
        "max_depth": [10, 20, 30],
        "min_samples_split": [2, 5, 10],
        "max_features": ["sqrt", "log2", "all"],
    },
    "knn": {
        "n_neighbors": [3, 5, 7, 9, 10, 13, 15],
        "metric": ["euclidean", "manhattan", "minkowski"],
        "weights": ["uniform", "distance"],
    },
}
# best values reported for each kind, used when no search is run
DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "svm": {"C": 10, "gamma": "scale"},
    "rf": {"n_estimators": 200, "max_depth": 30, "min_samples_split": 2},
    "dt": {"criterion": "entropy", "max_depth": 30, "min_samples_split": 2, "max_features": "sqrt"},
    "knn": {"n_neighbors": 5, "metric": "manhattan", "weights": "distance"},
}


def make_classifier(kind: str, params: Mapping[str, Any] | None = None, seed: int = 0, allow_svm: bool = False):
    if kind not in _CLASSES:
        raise ValueError(f"unknown model kind {kind!r}; choose from {sorted(_CLASSES)}")
    if kind == "svm" and not allow_svm:
        raise ValueError("the SVM model is disabled; enable it explicitly")
    params = dict(params or {})
    if kind in _SEEDED:
        params.setdefault("seed", seed)
    return _CLASSES[kind](**params)


def classifier_from_dict(data: Mapping[str, Any]):
    return _CLASSES[data["kind"]].from_dict(dict(data))


def macro_f1(gold: Sequence[str], pred: Sequence[str]) -> float:
    """Macro F1 over the classes present, leaving out the no-relation class."""
    return classification_report(gold, pred).macro["f1"]


@dataclass
class RelationModel:
    """A fitted featurizer plus classifier."""

    featurizer: RelationFeaturizer
    classifier: Any

    def predict(self, instances: Sequence[RelationInstance]) -> list[str]:
        if not instances:
            return []
        return self.classifier.predict(self.featurizer.transform(instances))

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": MODEL_FORMAT,
            "featurizer": self.featurizer.to_dict(),
            "classifier": self.classifier.to_dict(),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(
        cls,
        path: str | Path,
        embeddings: WordVectors | None = None,
        parse_paths: ParsePaths | None = None,
    ) -> "RelationModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path}: not a relation model file")
        return cls(
            RelationFeaturizer.from_dict(data["featurizer"], embeddings, parse_paths),
            classifier_from_dict(data["classifier"]),
        )


def train_relation_model(
    instances: Sequence[RelationInstance],
    kind: str = "rf",
    params: Mapping[str, Any] | None = None,
    combination: int = 3,
    embeddings: WordVectors | None = None,
    parse_paths: ParsePaths | None = None,
    seed: int = 0,
    allow_svm: bool = False,
) -> RelationModel:
    if not instances:
        raise ValueError("no relation instances to train on")
    featurizer = RelationFeaturizer(combination, embeddings, parse_paths)
    X = featurizer.fit_transform(instances)
    y = [i.label for i in instances]
    classifier = make_classifier(kind, params if params is not None else DEFAULT_PARAMS[kind], seed, allow_svm)
    return RelationModel(featurizer, classifier.fit(X, y))


@dataclass
class GridSearchResult:
    kind: str
    best_params: dict[str, Any]
    best_score: float
    table: list[tuple[dict[str, Any], float]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "best_params": self.best_params,
            "best_score": self.best_score,
            "evaluations": len(self.table),
            "table": [{"params": p, "score": s} for p, s in self.table],
        }


def grid_points(grid: Mapping[str, Sequence[Any]]) -> list[dict[str, Any]]:
    keys = list(grid)
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


def grid_search(
    kind: str,
    grid: Mapping[str, Sequence[Any]] | None,
    X_train: np.ndarray,
    y_train: Sequence[str],
    X_val: np.ndarray,
    y_val: Sequence[str],
    seed: int = 0,
    scorer: Callable[[Sequence[str], Sequence[str]], float] = macro_f1,
    allow_svm: bool = False,
) -> GridSearchResult:
    """Fit every grid point on train, score on validation; first best point wins."""
    grid = PARAM_GRIDS[kind] if grid is None else grid
    points = grid_points(grid)
    if not points or any(len(v) == 0 for v in grid.values()):
        raise ValueError("empty parameter grid")
    table: list[tuple[dict[str, Any], float]] = []
    best: tuple[dict[str, Any], float] | None = None
    for params in points:
        model = make_classifier(kind, params, seed, allow_svm).fit(X_train, y_train)
        score = float(scorer(list(y_val), model.predict(X_val)))
        table.append((params, score))
        if best is None or score > best[1]:
            best = (params, score)
        logger.debug("%s %s -> %.4f", kind, params, score)
    assert best is not None
    return GridSearchResult(kind, best[0], best[1], table)


@dataclass
class SweepRow:
    combination: int
    status: str
    blocks: list[str]
    report: MetricsReport | None = None
    n_features: int = 0

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "combination": self.combination,
            "status": self.status,
            "blocks": self.blocks,
            "n_features": self.n_features,
        }
        if self.report is not None:
            out["relations"] = {
                rel: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for rel, m in sorted(self.report.per_label.items())
            }
            out["macro"] = self.report.macro
            out["micro"] = self.report.micro
        return out


@dataclass
class SweepReport:
    kind: str
    params: dict[str, Any]
    rows: list[SweepRow] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": self.params,
            "relations": list(RELATION_TYPES),
            "combinations": [r.to_dict() for r in self.rows],
        }

    def to_csv(self) -> str:
        reports = {f"comb{r.combination}": r.report for r in self.rows if r.report is not None}
        return wide_table(reports, RELATION_TYPES)


def combination_sweep(
    train: Sequence[AnnotatedSample],
    test: Sequence[AnnotatedSample],
    kind: str = "rf",
    combinations: Sequence[int] = tuple(COMBINATIONS),
    params: Mapping[str, Any] | None = None,
    embeddings: WordVectors | None = None,
    parse_paths: ParsePaths | None = None,
    seed: int = 0,
    tagger: PosProvider | None = None,
    allow_svm: bool = False,
) -> SweepReport:
    """Train and test one model per feature combination; per-relation P/R/F1 rows.

    Combinations whose provider is not configured are reported as skipped.
    """
    params = dict(params if params is not None else DEFAULT_PARAMS[kind])
    train_pairs = corpus_pairs(train, tagger)
    test_pairs = corpus_pairs(test, tagger)
    gold = [i.label for i in test_pairs]
    report = SweepReport(kind, params)
    for comb in combinations:
        blocks = list(COMBINATIONS[comb])
        if RelationFeaturizer.missing_providers(comb, embeddings, parse_paths):
            report.rows.append(SweepRow(comb, SKIPPED, blocks))
            logger.info("combination %d %s", comb, SKIPPED)
            continue
        model = train_relation_model(train_pairs, kind, params, comb, embeddings, parse_paths, seed, allow_svm)
        pred = model.predict(test_pairs)
        metrics = classification_report(gold, pred, labels=RELATION_TYPES, exclude=(NO_RELATION,))
        report.rows.append(SweepRow(comb, "ok", blocks, metrics, len(model.featurizer.manifest())))
    return report
