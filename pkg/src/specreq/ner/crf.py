"""Linear-chain CRF over BILOU tags.

Emission scores come from interned string attributes (see
:mod:`specreq.ner.features`), transition scores from a tag-by-tag matrix.
Transitions the BILOU grammar forbids are fixed at ``-inf``, so decoding can
only produce well-formed sequences. Training minimizes the conditional
negative log-likelihood plus ``c1 * |w|_1 + c2 * |w|^2``; the L1 term is made
smooth by writing ``w = u - v`` with ``u, v >= 0`` and handing the bounded
problem to L-BFGS-B.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize, sparse

from specreq.ner.features import sequence_attributes
from specreq.textproc import (
    OUTSIDE,
    Token,
    end_allowed,
    parse_tag,
    pos_tag,
    tag_labels,
    transition_allowed,
)

logger = logging.getLogger(__name__)


class CrfError(ValueError):
    pass


def bilou_tagset(entity_labels: Sequence[str]) -> list[str]:
    tags = [OUTSIDE]
    for label in entity_labels:
        tags += [f"{p}-{label}" for p in "BILU"]
    return tags


def grammar_masks(tags: Sequence[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Additive masks (0 or -inf) for start, transitions and end."""
    n = len(tags)
    start = np.array([0.0 if transition_allowed(None, t) else -np.inf for t in tags])
    end = np.array([0.0 if end_allowed(t) else -np.inf for t in tags])
    trans = np.zeros((n, n))
    for i, prev in enumerate(tags):
        for j, cur in enumerate(tags):
            if not transition_allowed(prev, cur):
                trans[i, j] = -np.inf
    return start, trans, end


# ----------------------------------------------------------------- inference


def sequence_score(
    emissions: np.ndarray,
    transitions: np.ndarray,
    path: Sequence[int],
    start: np.ndarray | None = None,
    end: np.ndarray | None = None,
) -> float:
    if len(path) == 0:
        return 0.0
    score = float(emissions[np.arange(len(path)), path].sum())
    score += float(sum(transitions[a, b] for a, b in zip(path[:-1], path[1:])))
    if start is not None:
        score += float(start[path[0]])
    if end is not None:
        score += float(end[path[-1]])
    return score


def forward_backward(
    emissions: np.ndarray,
    transitions: np.ndarray,
    start: np.ndarray | None = None,
    end: np.ndarray | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Log-partition, node marginals ``(n, L)`` and summed edge marginals ``(L, L)``.

    Runs in scaled probability space: each step is renormalized and the scale
    factors are accumulated in log space.
    """
    n, L = emissions.shape
    if n == 0:
        return 0.0, np.zeros((0, L)), np.zeros((L, L))
    start = np.zeros(L) if start is None else start
    end = np.zeros(L) if end is None else end

    finite = transitions[np.isfinite(transitions)]
    t_shift = float(finite.max()) if finite.size else 0.0
    exp_t = np.exp(transitions - t_shift)
    e_shift = emissions.max(axis=1)
    exp_e = np.exp(emissions - e_shift[:, None])
    exp_start = np.exp(start)
    exp_end = np.exp(end)

    alpha = np.empty((n, L))
    scale = np.empty(n)
    a = exp_start * exp_e[0]
    scale[0] = a.sum()
    alpha[0] = a / scale[0]
    for t in range(1, n):
        a = (alpha[t - 1] @ exp_t) * exp_e[t]
        scale[t] = a.sum()
        alpha[t] = a / scale[t]
    final = float((alpha[-1] * exp_end).sum())
    if final == 0.0 or not np.all(scale > 0):
        return -np.inf, np.zeros((n, L)), np.zeros((L, L))
    log_z = float(np.log(scale).sum() + np.log(final) + e_shift.sum() + t_shift * (n - 1))

    beta = np.empty((n, L))
    beta[-1] = exp_end
    for t in range(n - 2, -1, -1):
        beta[t] = exp_t @ (exp_e[t + 1] * beta[t + 1]) / scale[t + 1]
    marginals = alpha * beta / final

    edges = np.zeros((L, L))
    for t in range(1, n):
        edges += np.outer(alpha[t - 1], exp_e[t] * beta[t]) * exp_t / (scale[t] * final)
    return log_z, marginals, edges


def viterbi(
    emissions: np.ndarray,
    transitions: np.ndarray,
    start: np.ndarray | None = None,
    end: np.ndarray | None = None,
) -> tuple[list[int], float]:
    """Best path and its score; ties resolve to the lowest tag index."""
    n, L = emissions.shape
    if n == 0:
        return [], 0.0
    start = np.zeros(L) if start is None else start
    end = np.zeros(L) if end is None else end
    delta = start + emissions[0]
    back = np.zeros((n, L), dtype=int)
    for t in range(1, n):
        scores = delta[:, None] + transitions
        back[t] = np.argmax(scores, axis=0)
        delta = scores[back[t], np.arange(L)] + emissions[t]
    delta = delta + end
    best = int(np.argmax(delta))
    path = [best]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    return path[::-1], float(delta[best])


# --------------------------------------------------------------------- model


@dataclass
class CrfModel:
    tags: list[str]
    attributes: dict[str, int]
    state_weights: np.ndarray            # (n_attributes, n_tags)
    transition_weights: np.ndarray       # (n_tags, n_tags)
    c1: float = 0.1
    c2: float = 0.1
    constrained: bool = True
    iterations: int = 0
    converged: bool = False
    log: list[float] = field(default_factory=list)
    strip_accents: bool = False

    def __post_init__(self) -> None:
        L = len(self.tags)
        if self.constrained:
            self.start_mask, self.transition_mask, self.end_mask = grammar_masks(self.tags)
        else:
            self.start_mask, self.transition_mask, self.end_mask = np.zeros(L), np.zeros((L, L)), np.zeros(L)

    def emissions(self, attributes: Sequence[Sequence[str]]) -> np.ndarray:
        out = np.zeros((len(attributes), len(self.tags)))
        for t, attrs in enumerate(attributes):
            ids = [self.attributes[a] for a in attrs if a in self.attributes]
            if ids:
                out[t] = self.state_weights[ids].sum(axis=0)
        return out

    @property
    def transitions(self) -> np.ndarray:
        return self.transition_weights + self.transition_mask

    def predict_attributes(self, attributes: Sequence[Sequence[str]]) -> list[str]:
        path, _ = viterbi(self.emissions(attributes), self.transitions, self.start_mask, self.end_mask)
        return [self.tags[i] for i in path]

    def to_dict(self) -> dict:
        names = sorted(self.attributes, key=self.attributes.get)
        state = {}
        for name in names:
            row = self.state_weights[self.attributes[name]]
            nz = {self.tags[j]: float(w) for j, w in enumerate(row) if w != 0.0}
            if nz:
                state[name] = nz
        trans = {
            prev: {cur: float(self.transition_weights[i, j]) for j, cur in enumerate(self.tags)}
            for i, prev in enumerate(self.tags)
        }
        return {
            "format": "specreq-crf/1",
            "tags": self.tags,
            "c1": self.c1,
            "c2": self.c2,
            "constrained": self.constrained,
            "iterations": self.iterations,
            "converged": self.converged,
            "strip_accents": self.strip_accents,
            "log": self.log,
            "state_features": state,
            "transitions": trans,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CrfModel":
        tags = list(data["tags"])
        col = {t: j for j, t in enumerate(tags)}
        names = list(data["state_features"])
        state = np.zeros((len(names), len(tags)))
        for i, name in enumerate(names):
            for tag, w in data["state_features"][name].items():
                state[i, col[tag]] = w
        trans = np.zeros((len(tags), len(tags)))
        for prev, row in data["transitions"].items():
            for cur, w in row.items():
                trans[col[prev], col[cur]] = w
        return cls(
            tags=tags,
            attributes={name: i for i, name in enumerate(names)},
            state_weights=state,
            transition_weights=trans,
            c1=data.get("c1", 0.1),
            c2=data.get("c2", 0.1),
            constrained=data.get("constrained", True),
            iterations=data.get("iterations", 0),
            converged=data.get("converged", False),
            log=list(data.get("log", [])),
            strip_accents=data.get("strip_accents", False),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CrfModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _with_pos(tokens: Sequence[Token]) -> list[Token]:
    if tokens and any(t.pos is None for t in tokens):
        return pos_tag(tokens)
    return list(tokens)


def crf_predict(model: CrfModel, tokens: Sequence[Token]) -> list[str]:
    if not tokens:
        return []
    return model.predict_attributes(sequence_attributes(_with_pos(tokens), model.strip_accents))


# ------------------------------------------------------------------ training


class CrfObjective:
    """Regularized negative log-likelihood over a fixed training set.

    ``value_and_grad(w)`` covers the smooth part (likelihood and L2); the L1
    term is added by the bounded reformulation in :func:`crf_train`.
    """

    def __init__(
        self,
        sequences: Sequence[Sequence[Sequence[str]]],
        gold: Sequence[Sequence[int]],
        tags: Sequence[str],
        attributes: dict[str, int],
        c2: float = 0.0,
        constrained: bool = True,
    ):
        self.tags = list(tags)
        self.n_tags = len(tags)
        self.n_attributes = len(attributes)
        self.c2 = c2
        L = self.n_tags
        if constrained:
            self.start, self.mask, self.end = grammar_masks(tags)
        else:
            self.start, self.mask, self.end = np.zeros(L), np.zeros((L, L)), np.zeros(L)

        rows, cols, self.bounds = [], [], [0]
        for seq in sequences:
            base = self.bounds[-1]
            for t, attrs in enumerate(seq):
                for a in attrs:
                    if a in attributes:
                        rows.append(base + t)
                        cols.append(attributes[a])
            self.bounds.append(base + len(seq))
        n_rows = self.bounds[-1]
        self.X = sparse.csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(n_rows, self.n_attributes)
        )
        self.gold = [np.asarray(g, dtype=int) for g in gold]
        gold_all = np.concatenate(self.gold) if self.gold else np.zeros(0, dtype=int)
        onehot = np.zeros((n_rows, L))
        onehot[np.arange(n_rows), gold_all] = 1.0
        self.gold_state = np.asarray(self.X.T @ onehot)
        self.gold_trans = np.zeros((L, L))
        for g in self.gold:
            np.add.at(self.gold_trans, (g[:-1], g[1:]), 1.0)
        self.size = self.n_attributes * L + L * L

    def unpack(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        split = self.n_attributes * self.n_tags
        return w[:split].reshape(self.n_attributes, self.n_tags), w[split:].reshape(self.n_tags, self.n_tags)

    def value_and_grad(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        state, trans = self.unpack(w)
        emissions = np.asarray(self.X @ state)
        full_trans = trans + self.mask
        nll = 0.0
        marg_all = np.zeros_like(emissions)
        edge_total = np.zeros((self.n_tags, self.n_tags))
        for k, g in enumerate(self.gold):
            lo, hi = self.bounds[k], self.bounds[k + 1]
            if hi == lo:
                continue
            e = emissions[lo:hi]
            log_z, marg, edges = forward_backward(e, full_trans, self.start, self.end)
            nll += log_z - sequence_score(e, full_trans, g, self.start, self.end)
            marg_all[lo:hi] = marg
            edge_total += edges
        grad_state = np.asarray(self.X.T @ marg_all) - self.gold_state
        grad_trans = edge_total - self.gold_trans
        grad = np.concatenate([grad_state.ravel(), grad_trans.ravel()])
        value = nll + self.c2 * float(w @ w)
        grad += 2.0 * self.c2 * w
        return value, grad


def crf_train(
    data: Sequence[tuple[Sequence[Token], Sequence[str]]],
    c1: float = 0.1,
    c2: float = 0.1,
    max_iter: int = 100,
    labels: Sequence[str] | None = None,
    tol: float = 1e-4,
    constrained: bool = True,
    strip_accents: bool = False,
) -> CrfModel:
    """Fit a CRF on ``(tokens, gold tags)`` pairs.

    ``labels`` fixes the entity label set (each expands to B/I/L/U tags);
    by default it is read off the gold tags. Optimization stops when the
    relative objective change drops below ``tol`` or after ``max_iter``
    iterations, and is deterministic for a given data order.
    """
    if not data:
        raise CrfError("empty training set")
    seen_labels: list[str] = []
    extended: list[str] = []
    for _, tags in data:
        for tag in tags:
            comps = parse_tag(tag)
            for label in tag_labels(tag):
                if label not in seen_labels:
                    seen_labels.append(label)
            if len(comps) > 1 and tag not in extended:
                extended.append(tag)
    if labels is None:
        labels = sorted(seen_labels)
    else:
        unknown = sorted(set(seen_labels) - set(labels))
        if unknown:
            raise CrfError(f"gold labels not in configured label set: {unknown}")
    tags = bilou_tagset(labels) + extended
    tag_index = {t: i for i, t in enumerate(tags)}

    sequences, gold = [], []
    attribute_ids: dict[str, int] = {}
    for tokens, tag_seq in data:
        if len(tokens) != len(tag_seq):
            raise CrfError("tokens and tags differ in length")
        attrs = sequence_attributes(_with_pos(tokens), strip_accents)
        for row in attrs:
            for a in row:
                attribute_ids.setdefault(a, len(attribute_ids))
        sequences.append(attrs)
        gold.append([tag_index[t] for t in tag_seq])

    objective = CrfObjective(sequences, gold, tags, attribute_ids, c2=c2, constrained=constrained)
    size = objective.size
    history: list[float] = []

    def split_objective(x: np.ndarray) -> tuple[float, np.ndarray]:
        u, v = x[:size], x[size:]
        value, grad = objective.value_and_grad(u - v)
        value += c1 * float(x.sum())
        history.append(value)
        return value, np.concatenate([grad + c1, -grad + c1])

    result = optimize.minimize(
        split_objective,
        np.zeros(2 * size),
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * (2 * size),
        options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-8},
    )
    w = result.x[:size] - result.x[size:]
    state, trans = objective.unpack(w)
    logger.info("CRF training: %d iterations, objective %.4f (%s)", result.nit, result.fun, result.message)
    return CrfModel(
        tags=tags,
        attributes=attribute_ids,
        state_weights=state.copy(),
        transition_weights=trans.copy(),
        c1=c1,
        c2=c2,
        constrained=constrained,
        iterations=int(result.nit),
        converged=bool(result.success),
        log=history,
        strip_accents=strip_accents,
    )
