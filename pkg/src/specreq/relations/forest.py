"""Random forest: seeded bootstrap bagging of CART trees with hard majority vote."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from specreq.relations.tree import DecisionTree, canonical_order


class RandomForest:
    kind = "rf"

    def __init__(
        self,
        n_estimators: int = 100,
        criterion: str = "gini",
        max_depth: int | None = None,
        min_samples_split: int = 2,
        max_features: Any = "sqrt",
        bootstrap: bool = True,
        seed: int = 0,
    ):
        if n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        self.n_estimators = n_estimators
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.classes_: list[str] = []
        self.trees_: list[DecisionTree] = []

    def get_params(self) -> dict[str, Any]:
        return {
            "n_estimators": self.n_estimators,
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
        }

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "RandomForest":
        """Tree ``i`` uses feature seed ``seed + i`` and its own bootstrap stream.

        Rows are put in canonical order first, so the fitted forest does not
        depend on the order instances were supplied in.
        """
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=object)
        if X.shape[0] == 0:
            raise ValueError("cannot train on an empty set")
        self.classes_ = sorted(set(y.tolist()))
        index = {c: i for i, c in enumerate(self.classes_)}
        order = canonical_order(X, np.array([index[v] for v in y], dtype=int))
        X, y = X[order], y[order]
        n = X.shape[0]
        self.trees_ = []
        for i in range(self.n_estimators):
            if self.bootstrap:
                rows = np.random.default_rng([self.seed, i]).integers(0, n, n)
            else:
                rows = np.arange(n)
            tree = DecisionTree(
                criterion=self.criterion,
                max_depth=self.max_depth,
                min_samples_split=self.min_samples_split,
                max_features=self.max_features,
                seed=self.seed + i,
            )
            self.trees_.append(tree.fit(X[rows], y[rows], classes=self.classes_))
        return self

    def votes(self, X: np.ndarray) -> np.ndarray:
        if not self.trees_:
            raise ValueError("forest is not fitted")
        X = np.asarray(X, dtype=float)
        counts = np.zeros((X.shape[0], len(self.classes_)), dtype=int)
        rows = np.arange(X.shape[0])
        for tree in self.trees_:
            counts[rows, tree.predict_index(X)] += 1
        return counts

    def predict(self, X: np.ndarray) -> list[str]:
        return [self.classes_[i] for i in np.argmax(self.votes(X), axis=1)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": self.get_params(),
            "classes": self.classes_,
            "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RandomForest":
        forest = cls(**data["params"])
        forest.classes_ = list(data["classes"])
        forest.trees_ = [DecisionTree.from_dict(t) for t in data["trees"]]
        return forest
