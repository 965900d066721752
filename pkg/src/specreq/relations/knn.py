"""k-nearest-neighbour classifier."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

METRICS = ("euclidean", "manhattan", "minkowski")
WEIGHTS = ("uniform", "distance")
MINKOWSKI_P = 3


def pairwise_distances(A: np.ndarray, B: np.ndarray, metric: str) -> np.ndarray:
    diff = np.abs(A[:, None, :] - B[None, :, :])
    if metric == "euclidean":
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if metric == "manhattan":
        return np.sum(diff, axis=-1)
    if metric == "minkowski":
        return np.sum(diff**MINKOWSKI_P, axis=-1) ** (1.0 / MINKOWSKI_P)
    raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")


class KNeighbors:
    """Majority (or inverse-distance weighted) vote of the k nearest training rows.

    Distance ties between neighbours go to the earlier training row; vote ties
    go to the lowest class index. With distance weighting, training rows at
    distance zero decide the vote on their own.
    """

    kind = "knn"

    def __init__(self, n_neighbors: int = 5, metric: str = "euclidean", weights: str = "uniform"):
        if metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
        if weights not in WEIGHTS:
            raise ValueError(f"weights must be one of {WEIGHTS}, got {weights!r}")
        if n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        self.n_neighbors = n_neighbors
        self.metric = metric
        self.weights = weights
        self.classes_: list[str] = []
        self.X_: np.ndarray | None = None
        self.y_: np.ndarray | None = None

    def get_params(self) -> dict[str, Any]:
        return {"n_neighbors": self.n_neighbors, "metric": self.metric, "weights": self.weights}

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "KNeighbors":
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            raise ValueError("cannot train on an empty set")
        if self.n_neighbors > X.shape[0]:
            raise ValueError(f"k={self.n_neighbors} exceeds the {X.shape[0]} training instances")
        self.classes_ = sorted(set(y))
        index = {c: i for i, c in enumerate(self.classes_)}
        self.X_ = X
        self.y_ = np.array([index[v] for v in y], dtype=int)
        return self

    def predict_index(self, X: np.ndarray, batch: int = 512) -> np.ndarray:
        if self.X_ is None:
            raise ValueError("model is not fitted")
        X = np.asarray(X, dtype=float)
        k, n_classes = self.n_neighbors, len(self.classes_)
        out = np.empty(X.shape[0], dtype=int)
        for lo in range(0, X.shape[0], batch):
            dist = pairwise_distances(X[lo:lo + batch], self.X_, self.metric)
            nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
            for r, idx in enumerate(nearest):
                d = dist[r, idx]
                labels = self.y_[idx]
                if self.weights == "uniform":
                    w = np.ones(k)
                elif (d == 0).any():
                    w = (d == 0).astype(float)
                else:
                    w = 1.0 / d
                out[lo + r] = int(np.argmax(np.bincount(labels, weights=w, minlength=n_classes)))
        return out

    def predict(self, X: np.ndarray) -> list[str]:
        return [self.classes_[i] for i in self.predict_index(X)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": self.get_params(),
            "classes": self.classes_,
            "X": self.X_.tolist() if self.X_ is not None else None,
            "y": self.y_.tolist() if self.y_ is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KNeighbors":
        model = cls(**data["params"])
        model.classes_ = list(data["classes"])
        if data.get("X") is not None:
            model.X_ = np.asarray(data["X"], dtype=float)
            model.y_ = np.asarray(data["y"], dtype=int)
        return model
