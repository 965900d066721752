"""Optional RBF-kernel SVM trained with simplified SMO, one-vs-rest.

Disabled unless explicitly enabled in the grid search or pipeline config; it
is slow on large sets and nothing downstream depends on it.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np


def _rbf(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def _smo(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_passes: int, rng: np.random.Generator):
    n = y.shape[0]
    alpha = np.zeros(n)
    b = 0.0
    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            e_i = float((alpha * y) @ K[:, i] + b - y[i])
            if (y[i] * e_i < -tol and alpha[i] < C) or (y[i] * e_i > tol and alpha[i] > 0):
                j = int(rng.integers(0, n - 1))
                j += j >= i
                e_j = float((alpha * y) @ K[:, j] + b - y[j])
                a_i, a_j = alpha[i], alpha[j]
                if y[i] != y[j]:
                    lo, hi = max(0.0, a_j - a_i), min(C, C + a_j - a_i)
                else:
                    lo, hi = max(0.0, a_i + a_j - C), min(C, a_i + a_j)
                eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
                if lo >= hi or eta >= 0:
                    continue
                alpha[j] = np.clip(a_j - y[j] * (e_i - e_j) / eta, lo, hi)
                if abs(alpha[j] - a_j) < 1e-5:
                    continue
                alpha[i] = a_i + y[i] * y[j] * (a_j - alpha[j])
                b1 = b - e_i - y[i] * (alpha[i] - a_i) * K[i, i] - y[j] * (alpha[j] - a_j) * K[i, j]
                b2 = b - e_j - y[i] * (alpha[i] - a_i) * K[i, j] - y[j] * (alpha[j] - a_j) * K[j, j]
                if 0 < alpha[i] < C:
                    b = b1
                elif 0 < alpha[j] < C:
                    b = b2
                else:
                    b = (b1 + b2) / 2.0
                changed += 1
        passes = passes + 1 if changed == 0 else 0
    return alpha, b


class SupportVectorMachine:
    kind = "svm"

    def __init__(
        self,
        C: float = 1.0,
        gamma: Any = "scale",
        tol: float = 1e-3,
        max_passes: int = 5,
        seed: int = 0,
    ):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes
        self.seed = seed
        self.classes_: list[str] = []
        self.gamma_: float = 0.0
        self.X_: np.ndarray | None = None
        self.coef_: np.ndarray | None = None     # (n_classes, n_train) alpha * y
        self.intercept_: np.ndarray | None = None

    def get_params(self) -> dict[str, Any]:
        return {"C": self.C, "gamma": self.gamma, "tol": self.tol, "max_passes": self.max_passes, "seed": self.seed}

    def _resolve_gamma(self, X: np.ndarray) -> float:
        if self.gamma == "scale":
            var = float(X.var())
            return 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        if self.gamma == "auto":
            return 1.0 / max(X.shape[1], 1)
        return float(self.gamma)

    def fit(self, X: np.ndarray, y: Sequence[str]) -> "SupportVectorMachine":
        X = np.asarray(X, dtype=float)
        if X.shape[0] < 2:
            raise ValueError("need at least two training instances")
        self.classes_ = sorted(set(y))
        y_arr = np.asarray(y, dtype=object)
        self.gamma_ = self._resolve_gamma(X)
        K = _rbf(X, X, self.gamma_)
        rng = np.random.default_rng(self.seed)
        coefs, intercepts = [], []
        for label in self.classes_:
            target = np.where(y_arr == label, 1.0, -1.0)
            if len(self.classes_) == 1:
                alpha, b = np.zeros(X.shape[0]), 1.0
            else:
                alpha, b = _smo(K, target, self.C, self.tol, self.max_passes, rng)
            coefs.append(alpha * target)
            intercepts.append(b)
        self.X_ = X
        self.coef_ = np.asarray(coefs)
        self.intercept_ = np.asarray(intercepts)
        return self

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        if self.X_ is None:
            raise ValueError("model is not fitted")
        K = _rbf(np.asarray(X, dtype=float), self.X_, self.gamma_)
        return K @ self.coef_.T + self.intercept_

    def predict(self, X: np.ndarray) -> list[str]:
        return [self.classes_[i] for i in np.argmax(self.decision_function(X), axis=1)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "params": self.get_params(),
            "classes": self.classes_,
            "gamma_": self.gamma_,
            "X": self.X_.tolist(),
            "coef": self.coef_.tolist(),
            "intercept": self.intercept_.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SupportVectorMachine":
        model = cls(**data["params"])
        model.classes_ = list(data["classes"])
        model.gamma_ = float(data["gamma_"])
        model.X_ = np.asarray(data["X"], dtype=float)
        model.coef_ = np.asarray(data["coef"], dtype=float)
        model.intercept_ = np.asarray(data["intercept"], dtype=float)
        return model
