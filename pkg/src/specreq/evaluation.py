"""Precision/recall/F1 reports, confusion matrices and the rule-based validation harness."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterable, Mapping, Sequence

from specreq.annotations import AnnotatedSample, EntitySpan
from specreq.textproc import OUTSIDE, bilou_encode, tag_labels, tokenize

if TYPE_CHECKING:
    from specreq.ner.matchers import DictionaryPack, RulePack


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


@dataclass(frozen=True)
class LabelMetrics:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def support(self) -> int:
        return self.tp + self.fn

    @property
    def precision(self) -> float:
        return prf(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return prf(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self) -> float:
        return prf(self.tp, self.fp, self.fn)[2]

    def to_dict(self) -> dict[str, float]:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


@dataclass
class Confusion:
    labels: list[str]
    matrix: list[list[int]]     # rows = gold, columns = predicted

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], labels: Sequence[str] | None = None) -> "Confusion":
        counts = Counter(pairs)
        if labels is None:
            seen = {g for g, _ in counts} | {p for _, p in counts}
            labels = sorted(seen, key=lambda t: (t != OUTSIDE, t))
        index = {label: i for i, label in enumerate(labels)}
        matrix = [[0] * len(labels) for _ in labels]
        for (g, p), n in counts.items():
            matrix[index[g]][index[p]] += n
        return cls(list(labels), matrix)

    @property
    def total(self) -> int:
        return sum(map(sum, self.matrix))

    @property
    def diagonal(self) -> int:
        return sum(self.matrix[i][i] for i in range(len(self.labels)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["gold\\pred"] + self.labels)
        for label, row in zip(self.labels, self.matrix):
            writer.writerow([label] + row)
        return buf.getvalue()


@dataclass
class MetricsReport:
    """Per-label metrics plus macro and micro aggregates.

    ``macro_labels`` are the labels averaged by the macro scores (the
    outside/no-relation class is left out). Micro scores pool the counts of
    ``micro_counts``.
    """

    level: str
    per_label: dict[str, LabelMetrics]
    macro_labels: list[str]
    micro_counts: dict[str, LabelMetrics]
    confusion: Confusion | None = None
    per_tag: dict[str, LabelMetrics] = field(default_factory=dict)

    @property
    def macro(self) -> dict[str, float]:
        rows = [self.per_label.get(label, LabelMetrics()) for label in self.macro_labels]
        if not rows:
            return {"precision": 0.0, "recall": 0.0, "f1": 0.0}
        return {
            "precision": sum(r.precision for r in rows) / len(rows),
            "recall": sum(r.recall for r in rows) / len(rows),
            "f1": sum(r.f1 for r in rows) / len(rows),
        }

    @property
    def micro(self) -> dict[str, float]:
        tp = sum(m.tp for m in self.micro_counts.values())
        fp = sum(m.fp for m in self.micro_counts.values())
        fn = sum(m.fn for m in self.micro_counts.values())
        p, r, f = prf(tp, fp, fn)
        return {"precision": p, "recall": r, "f1": f}

    @property
    def accuracy(self) -> float | None:
        if self.confusion is None or not self.confusion.total:
            return None
        return self.confusion.diagonal / self.confusion.total

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "level": self.level,
            "per_label": {k: v.to_dict() for k, v in sorted(self.per_label.items())},
            "macro": self.macro,
            "macro_labels": self.macro_labels,
            "micro": self.micro,
        }
        if self.per_tag:
            out["per_tag"] = {k: v.to_dict() for k, v in sorted(self.per_tag.items())}
        if self.confusion is not None:
            out["accuracy"] = self.accuracy
            out["confusion"] = {"labels": self.confusion.labels, "matrix": self.confusion.matrix}
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["label", "precision", "recall", "f1", "support"])
        for label in sorted(self.per_label):
            m = self.per_label[label]
            writer.writerow([label, f"{m.precision:.4f}", f"{m.recall:.4f}", f"{m.f1:.4f}", m.support])
        for name, agg in (("macro", self.macro), ("micro", self.micro)):
            writer.writerow([name, f"{agg['precision']:.4f}", f"{agg['recall']:.4f}", f"{agg['f1']:.4f}", ""])
        return buf.getvalue()


def _counts_from_sets(pairs: Iterable[tuple[set[str], set[str]]]) -> dict[str, LabelMetrics]:
    tp: Counter[str] = Counter()
    fp: Counter[str] = Counter()
    fn: Counter[str] = Counter()
    for gold, pred in pairs:
        for label in gold & pred:
            tp[label] += 1
        for label in pred - gold:
            fp[label] += 1
        for label in gold - pred:
            fn[label] += 1
    labels = set(tp) | set(fp) | set(fn)
    return {label: LabelMetrics(tp[label], fp[label], fn[label]) for label in labels}


def _token_types(tag: str) -> set[str]:
    labels = tag_labels(tag)
    return set(labels) if labels else {OUTSIDE}


def token_eval(
    gold: Sequence[str] | Sequence[Sequence[str]],
    pred: Sequence[str] | Sequence[Sequence[str]],
    labels: Sequence[str] | None = None,
) -> MetricsReport:
    """Token-level comparison of tag sequences (one sequence or a list of them).

    ``per_label`` is keyed by entity type (a token in an overlap counts for
    both of its types); ``per_tag``, the micro scores and the confusion
    matrix use full BILOU tags, so micro precision = recall = accuracy.
    """
    if gold and isinstance(gold[0], str):
        gold, pred = [gold], [pred]  # type: ignore[list-item]
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sequences but {len(pred)} predicted")
    flat: list[tuple[str, str]] = []
    for g_seq, p_seq in zip(gold, pred):
        if len(g_seq) != len(p_seq):
            raise ValueError(f"sequence length mismatch: {len(g_seq)} gold vs {len(p_seq)} predicted")
        flat.extend(zip(g_seq, p_seq))

    per_label = _counts_from_sets((_token_types(g), _token_types(p)) for g, p in flat)
    per_tag = _counts_from_sets(({g}, {p}) for g, p in flat)
    for label in labels or ():
        per_label.setdefault(label, LabelMetrics())
    macro_labels = sorted(label for label in per_label if label != OUTSIDE)
    return MetricsReport(
        level="token",
        per_label=per_label,
        macro_labels=macro_labels,
        micro_counts=per_tag,
        confusion=Confusion.from_pairs(flat),
        per_tag=per_tag,
    )


def span_eval(
    gold: Iterable[EntitySpan] | Sequence[Iterable[EntitySpan]],
    pred: Iterable[EntitySpan] | Sequence[Iterable[EntitySpan]],
    labels: Sequence[str] | None = None,
) -> MetricsReport:
    """Exact-match span scoring: a hit needs equal start, end and label.

    Accepts flat span collections or per-sample lists of them (offsets are
    only compared within a sample).
    """
    gold_list, pred_list = list(gold), list(pred)
    if gold_list and not isinstance(gold_list[0], EntitySpan):
        g_keys = {(i,) + s.key for i, spans in enumerate(gold_list) for s in spans}
        p_keys = {(i,) + s.key for i, spans in enumerate(pred_list) for s in spans}
    else:
        g_keys = {(0,) + s.key for s in gold_list}
        p_keys = {(0,) + s.key for s in pred_list}

    tp: Counter[str] = Counter(k[3] for k in g_keys & p_keys)
    fp: Counter[str] = Counter(k[3] for k in p_keys - g_keys)
    fn: Counter[str] = Counter(k[3] for k in g_keys - p_keys)
    names = set(tp) | set(fp) | set(fn) | set(labels or ())
    per_label = {label: LabelMetrics(tp[label], fp[label], fn[label]) for label in names}
    return MetricsReport(
        level="span",
        per_label=per_label,
        macro_labels=sorted(names),
        micro_counts=per_label,
    )


def classification_report(
    gold: Sequence[str],
    pred: Sequence[str],
    labels: Sequence[str] | None = None,
    exclude: Sequence[str] = ("0",),
) -> MetricsReport:
    """Per-class metrics for single-label predictions.

    Classes in ``exclude`` still count as errors for the others but are not
    themselves scored or averaged.
    """
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold labels but {len(pred)} predictions")
    counts = _counts_from_sets(({g}, {p}) for g, p in zip(gold, pred))
    names = set(labels) if labels is not None else (set(gold) | set(pred))
    names -= set(exclude)
    per_label = {label: counts.get(label, LabelMetrics()) for label in names}
    all_labels = sorted(set(gold) | set(pred) | names)
    return MetricsReport(
        level="class",
        per_label=per_label,
        macro_labels=sorted(names),
        micro_counts=per_label,
        confusion=Confusion.from_pairs(zip(gold, pred), labels=all_labels),
    )


def wide_table(reports: Mapping[str, MetricsReport], labels: Sequence[str]) -> str:
    """CSV with one row per model and P/R/F1 columns per label, then macro/micro."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = ["model"]
    for label in labels:
        header += [f"{label}_P", f"{label}_R", f"{label}_F1"]
    header += ["macro_P", "macro_R", "macro_F1", "micro_P", "micro_R", "micro_F1"]
    writer.writerow(header)
    for model, report in reports.items():
        row: list[Any] = [model]
        for label in labels:
            m = report.per_label.get(label, LabelMetrics())
            row += [f"{m.precision:.2f}", f"{m.recall:.2f}", f"{m.f1:.2f}"]
        for agg in (report.macro, report.micro):
            row += [f"{agg['precision']:.2f}", f"{agg['recall']:.2f}", f"{agg['f1']:.2f}"]
        writer.writerow(row)
    return buf.getvalue()


# ------------------------------------------------------- rule-based harness


@dataclass
class NerValidation:
    token: MetricsReport
    span: MetricsReport
    predictions: list[list[EntitySpan]]

    def to_dict(self) -> dict[str, Any]:
        return {"token_level": self.token.to_dict(), "span_level": self.span.to_dict()}


def validate_predictions(
    samples: Sequence[AnnotatedSample],
    predictions: Sequence[Sequence[EntitySpan]],
    labels: Sequence[str] | None = None,
) -> NerValidation:
    """Score predicted spans against gold at token (BILOU) and span level."""
    gold_tags, pred_tags = [], []
    for sample, spans in zip(samples, predictions):
        tokens = tokenize(sample.text)
        gold_tags.append(bilou_encode(tokens, sample.entities))
        pred_tags.append(bilou_encode(tokens, spans))
    return NerValidation(
        token=token_eval(gold_tags, pred_tags, labels=labels),
        span=span_eval([s.entities for s in samples], [list(p) for p in predictions], labels=labels),
        predictions=[list(p) for p in predictions],
    )


def validate_rule_based(
    samples: Sequence[AnnotatedSample],
    dictionary: "DictionaryPack",
    rules: "RulePack",
    labels: Sequence[str] | None = None,
) -> NerValidation:
    """Run the dictionary and rule matchers over test samples and score them.

    Steps: apply the packs, collect offsets and labels, BILOU-encode gold and
    predicted spans over one tokenization, compare, and report metrics with
    the confusion matrix.
    """
    from specreq.ner.matchers import dict_match, rule_match

    predictions = [dict_match(s.text, dictionary) + rule_match(s.text, rules) for s in samples]
    return validate_predictions(samples, predictions, labels=labels)
