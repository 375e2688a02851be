"""Confusion-matrix classification metrics and top-k accuracy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass
class ClassScores:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    jaccard: float


@dataclass
class EvalReport:
    accuracy: float
    macro_f1: float
    macro_jaccard: float
    top_k_accuracy: dict[int, float]
    per_class: dict[str, ClassScores]
    confusion: np.ndarray = field(repr=False)
    labels: tuple[str, ...] = ()
    n: int = 0
    group_accuracy: float | None = None

    def to_json(self) -> dict:
        obj = {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "macro_jaccard": self.macro_jaccard,
            "top_k_accuracy": {str(k): v for k, v in sorted(self.top_k_accuracy.items())},
            "per_class": {lab: vars(cs) for lab, cs in self.per_class.items()},
            "labels": list(self.labels),
            "confusion": self.confusion.tolist(),
        }
        if self.group_accuracy is not None:
            obj["group_accuracy"] = self.group_accuracy
        return obj


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def confusion_matrix(y_true: Sequence[str], y_pred: Sequence[str], labels: Sequence[str]) -> np.ndarray:
    """Rows are true labels, columns predicted labels."""
    index = {lab: i for i, lab in enumerate(labels)}
    cm = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred, strict=True):
        cm[index[t], index[p]] += 1
    return cm


def class_scores(cm: np.ndarray, i: int) -> ClassScores:
    tp = int(cm[i, i])
    fp = int(cm[:, i].sum()) - tp
    fn = int(cm[i, :].sum()) - tp
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return ClassScores(tp, fp, fn, precision, recall, f1, _ratio(tp, tp + fp + fn))


def report_from_predictions(
    y_true: Sequence[str],
    y_pred: Sequence[str],
    rankings: Sequence[Sequence[str]],
    labels: Sequence[str],
    ks: Sequence[int] = (1, 3, 5),
) -> EvalReport:
    """Accuracy, macro F1/Jaccard over classes present in ``y_true``, and top-k hits.

    ``rankings[i]`` lists labels from most to least probable for sample i.
    """
    n = len(y_true)
    if n == 0:
        raise ValueError("cannot score an empty prediction set")
    cm = confusion_matrix(y_true, y_pred, labels)
    per_class = {lab: class_scores(cm, i) for i, lab in enumerate(labels)}
    present = [lab for lab in labels if cm[labels.index(lab)].sum() > 0]
    top_k = {}
    for k in ks:
        hits = sum(1 for t, r in zip(y_true, rankings) if t in list(r)[:k])
        top_k[k] = hits / n
    return EvalReport(
        accuracy=float(np.trace(cm)) / n,
        macro_f1=float(np.mean([per_class[lab].f1 for lab in present])),
        macro_jaccard=float(np.mean([per_class[lab].jaccard for lab in present])),
        top_k_accuracy=top_k,
        per_class=per_class,
        confusion=cm,
        labels=tuple(labels),
        n=n,
    )
