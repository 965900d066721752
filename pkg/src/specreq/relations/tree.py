"""CART decision tree (gini or entropy) with per-split feature subsampling."""

from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np

CRITERIA = ("gini", "entropy")
_GAIN_EPS = 1e-12


def canonical_order(X: np.ndarray, y_idx: np.ndarray) -> np.ndarray:
    """Row permutation sorting by (x0, x1, ..., label); makes fits independent of input order."""
    keys = [y_idx] + [X[:, j] for j in reversed(range(X.shape[1]))]
    return np.lexsort(np.vstack(keys)) if X.shape[0] else np.arange(0)


def resolve_max_features(max_features: Any, n_features: int) -> int:
    if n_features == 0:
        return 0
    if max_features in (None, "all"):
        return n_features
    if max_features in ("sqrt", "auto"):
        return max(1, int(math.sqrt(n_features)))
    if max_features == "log2":
        return max(1, int(math.log2(n_features)))
    if isinstance(max_features, int) and max_features > 0:
        return min(max_features, n_features)
    raise ValueError(f"unsupported max_features {max_features!r}")


def _impurity(counts: np.ndarray, totals: np.ndarray, criterion: str) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals[..., None]
        if criterion == "gini":
            out = 1.0 - np.sum(p * p, axis=-1)
        else:
            logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
            out = -np.sum(p * logs, axis=-1)
    return np.where(totals > 0, out, 0.0)


def best_splits(
    cols: np.ndarray, y_idx: np.ndarray, n_classes: int, criterion: str
) -> list[tuple[float, float] | None]:
    """Best (gain, threshold) per column of ``cols``; thresholds are midpoints.

    Gains within ``_GAIN_EPS`` of the column's best count as ties and go to
    the lowest threshold.
    """
    n, k = cols.shape
    order = np.argsort(cols, axis=0, kind="stable")
    xs = np.take_along_axis(cols, order, axis=0)
    ys = y_idx[order]
    valid = xs[:-1] < xs[1:]
    onehot = np.zeros((n, k, n_classes))
    np.put_along_axis(onehot, ys[..., None], 1.0, axis=2)
    left = np.cumsum(onehot, axis=0)[:-1]
    total = np.bincount(y_idx, minlength=n_classes).astype(float)
    right = total - left
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    parent = _impurity(total, np.array(float(n)), criterion)
    child = (n_left * _impurity(left, n_left, criterion) + n_right * _impurity(right, n_right, criterion)) / n
    gains = np.where(valid, parent - child, -np.inf)
    best = np.argmax(gains >= gains.max(axis=0) - _GAIN_EPS, axis=0)
    out: list[tuple[float, float] | None] = []
    for j in range(k):
        i = best[j]
        if not valid[i, j]:
            out.append(None)
        else:
            out.append((float(gains[i, j]), float((xs[i, j] + xs[i + 1, j]) / 2.0)))
    return out


def best_split_on_feature(
    x: np.ndarray, y_idx: np.ndarray, n_classes: int, criterion: str
) -> tuple[float, float] | None:
    return best_splits(x[:, None], y_idx, n_classes, criterion)[0]


class DecisionTree:
    """Binary CART classifier.

    Leaves predict the majority class with ties going to the lowest class
    index (classes are the sorted distinct labels). At each node features are
    visited in a seeded random order until ``max_features`` non-constant ones
    have been evaluated; columns constant over the whole training set are
    never candidates.
    """

    kind = "dt"

    def __init__(
        self,
        criterion: str = "gini",
        max_depth: int | None = None,
        min_samples_split: int = 2,
        max_features: Any = "all",
        seed: int = 0,
    ):
        if criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
        if min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.seed = seed
        self.classes_: list[str] = []
        self.n_features_ = 0
        # flat node arrays; feature -1 marks a leaf
        self.feature_: list[int] = []
        self.threshold_: list[float] = []
        self.left_: list[int] = []
        self.right_: list[int] = []
        self.counts_: list[list[int]] = []

    def get_params(self) -> dict[str, Any]:
        return {
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "min_samples_split": self.min_samples_split,
            "max_features": self.max_features,
            "seed": self.seed,
        }

    def fit(self, X: np.ndarray, y: Sequence[str], classes: Sequence[str] | None = None) -> "DecisionTree":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=object)
        if X.shape[0] == 0:
            raise ValueError("cannot train on an empty set")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y lengths differ")
        self.classes_ = sorted(set(classes) if classes is not None else set(y.tolist()))
        index = {c: i for i, c in enumerate(self.classes_)}
        y_idx = np.array([index[v] for v in y], dtype=int)
        order = canonical_order(X, y_idx)
        X, y_idx = X[order], y_idx[order]
        self.n_features_ = X.shape[1]
        active = np.flatnonzero(X.max(axis=0) > X.min(axis=0)) if X.shape[1] else np.arange(0)
        k = resolve_max_features(self.max_features, len(active))
        rng = np.random.default_rng(self.seed)
        n_classes = len(self.classes_)

        self.feature_, self.threshold_, self.left_, self.right_, self.counts_ = [], [], [], [], []

        def new_node(rows: np.ndarray) -> int:
            self.feature_.append(-1)
            self.threshold_.append(0.0)
            self.left_.append(-1)
            self.right_.append(-1)
            self.counts_.append(np.bincount(y_idx[rows], minlength=n_classes).tolist())
            return len(self.feature_) - 1

        stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
        while stack:
            node, rows, depth = stack.pop()
            counts = self.counts_[node]
            if (
                (self.max_depth is not None and depth >= self.max_depth)
                or rows.shape[0] < self.min_samples_split
                or sum(1 for c in counts if c) <= 1
            ):
                continue
            # visit features in random order, evaluating the first k that vary here
            order = active[rng.permutation(len(active))]
            sub = X[np.ix_(rows, order)]
            varying = order[sub.max(axis=0) > sub.min(axis=0)][:k]
            best: tuple[float, int, float] | None = None
            if varying.size:
                found = best_splits(X[np.ix_(rows, varying)], y_idx[rows], n_classes, self.criterion)
                for f, cand in zip(varying, found):
                    if cand and (best is None or cand[0] > best[0] + _GAIN_EPS):
                        best = (cand[0], int(f), cand[1])
            if best is None:
                continue
            _, f, thr = best
            go_left = X[rows, f] <= thr
            left_rows, right_rows = rows[go_left], rows[~go_left]
            self.feature_[node] = f
            self.threshold_[node] = thr
            self.left_[node] = new_node(left_rows)
            self.right_[node] = new_node(right_rows)
            # pop order: left subtree first
            stack.append((self.right_[node], right_rows, depth + 1))
            stack.append((self.left_[node], left_rows, depth + 1))
        return self

    def _leaves(self, X: np.ndarray) -> np.ndarray:
        if not self.feature_:
            raise ValueError("tree is not fitted")
        X = np.asarray(X, dtype=float)
        feature = np.asarray(self.feature_)
        threshold = np.asarray(self.threshold_)
        left, right = np.asarray(self.left_), np.asarray(self.right_)
        node = np.zeros(X.shape[0], dtype=int)
        while True:
            internal = feature[node] >= 0
            if not internal.any():
                return node
            rows = np.flatnonzero(internal)
            cur = node[rows]
            go_left = X[rows, feature[cur]] <= threshold[cur]
            node[rows] = np.where(go_left, left[cur], right[cur])

    def predict_index(self, X: np.ndarray) -> np.ndarray:
        majority = np.argmax(np.asarray(self.counts_), axis=1)    # argmax keeps the lowest index on ties
        return majority[self._leaves(X)]

    def predict(self, X: np.ndarray) -> list[str]:
        return [self.classes_[i] for i in self.predict_index(X)]

    @property
    def depth(self) -> int:
        def d(node: int) -> int:
            if self.feature_[node] < 0:
                return 0
            return 1 + max(d(self.left_[node]), d(self.right_[node]))

        return d(0) if self.feature_ else 0

    @property
    def n_leaves(self) -> int:
        return sum(1 for f in self.feature_ if f < 0)

    def root_split(self) -> tuple[int, float] | None:
        if not self.feature_ or self.feature_[0] < 0:
            return None
        return self.feature_[0], self.threshold_[0]

    def _node_dict(self, node: int) -> dict[str, Any]:
        if self.feature_[node] < 0:
            return {"counts": self.counts_[node]}
        return {
            "feature": self.feature_[node],
            "threshold": self.threshold_[node],
            "counts": self.counts_[node],
            "left": self._node_dict(self.left_[node]),
            "right": self._node_dict(self.right_[node]),
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": self.get_params(),
            "classes": self.classes_,
            "n_features": self.n_features_,
            "tree": self._node_dict(0),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DecisionTree":
        tree = cls(**data["params"])
        tree.classes_ = list(data["classes"])
        tree.n_features_ = int(data["n_features"])

        def add(node: dict[str, Any]) -> int:
            i = len(tree.feature_)
            tree.feature_.append(int(node.get("feature", -1)))
            tree.threshold_.append(float(node.get("threshold", 0.0)))
            tree.left_.append(-1)
            tree.right_.append(-1)
            tree.counts_.append(list(node["counts"]))
            if "left" in node:
                tree.left_[i] = add(node["left"])
                tree.right_[i] = add(node["right"])
            return i

        add(data["tree"])
        return tree
