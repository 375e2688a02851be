"""Disease prediction heads (flat and two-stage) and the cross-entropy loss."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import LOG_CLAMP, Tensor


@dataclass
class HeadParams:
    W: Tensor  # n x (d1 + d2)
    b: Tensor  # n
    labels: tuple[str, ...]

    def __post_init__(self):
        self.labels = tuple(self.labels)
        if self.W.shape[0] != len(self.labels) or self.b.shape != (len(self.labels),):
            raise ValueError("head shapes do not match the label set")


@dataclass
class Prediction:
    distribution: np.ndarray
    labels: tuple[str, ...]
    top_label: str
    ranked: list[tuple[str, float]]
    group: str | None = None
    group_distribution: dict[str, float] | None = field(default=None, repr=False)

    def top_k(self, k: int) -> list[tuple[str, float]]:
        return self.ranked[:k]

    def probability(self, label: str) -> float:
        return float(self.distribution[self.labels.index(label)])


def rank(labels: Sequence[str], probs: np.ndarray) -> list[tuple[str, float]]:
    """Descending probability, ties broken by label."""
    return sorted(((lab, float(p)) for lab, p in zip(labels, probs)), key=lambda lp: (-lp[1], lp[0]))


def prediction_from_probs(labels: Sequence[str], probs: np.ndarray) -> Prediction:
    ranked = rank(labels, probs)
    return Prediction(np.asarray(probs, dtype=np.float64), tuple(labels), ranked[0][0], ranked)


def head_logits(s, context, params: HeadParams) -> Tensor:
    features = ad.concat([ad.as_tensor(s), ad.as_tensor(context)])
    return params.W @ features + params.b


def predict(s, context, params: HeadParams) -> Prediction:
    probs = ad.softmax(head_logits(s, context, params)).data
    return prediction_from_probs(params.labels, probs)


def loss(predictions: Sequence[Prediction], labels: Sequence[str]) -> float:
    """Summed categorical cross entropy; probabilities clamped at 1e-12."""
    total = 0.0
    for pred, label in zip(predictions, labels, strict=True):
        total -= np.log(max(pred.probability(label), LOG_CLAMP))
    return float(total)


def hierarchical_predict(
    s,
    context,
    group_head: HeadParams,
    per_group_heads: Mapping[str, HeadParams],
    group_map: Mapping[str, str],
    labels: Sequence[str] | None = None,
) -> Prediction:
    """Pick the most probable group, then the most probable disease inside it.

    The reported distribution is P(group) * P(disease | group) so it still
    sums to one; the ranking lists the chosen group's diseases first so that
    the top label is the two-stage decision.
    """
    for g in group_head.labels:
        if g not in per_group_heads or not per_group_heads[g].labels:
            raise ValueError(f"group {g!r} has no diseases")
    g_probs = ad.softmax(head_logits(s, context, group_head)).data
    g_ranked = rank(group_head.labels, g_probs)
    chosen = g_ranked[0][0]

    diseases = list(labels) if labels is not None else sorted(group_map)
    joint = dict.fromkeys(diseases, 0.0)
    within: dict[str, list[tuple[str, float]]] = {}
    for g, gp in zip(group_head.labels, g_probs):
        head = per_group_heads[g]
        d_probs = ad.softmax(head_logits(s, context, head)).data
        within[g] = rank(head.labels, d_probs)
        for d, p in zip(head.labels, d_probs):
            joint[d] = gp * p

    labels = tuple(diseases)
    dist = np.array([joint[d] for d in labels])
    first = [d for d, _ in within[chosen]]
    taken = set(first)
    rest = [d for d, _ in rank(labels, dist) if d not in taken]
    ranked = [(d, joint[d]) for d in first + rest]
    return Prediction(
        dist, labels, first[0], ranked, group=chosen,
        group_distribution={g: float(p) for g, p in zip(group_head.labels, g_probs)},
    )
