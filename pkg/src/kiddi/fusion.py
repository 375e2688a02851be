"""Additive attention over the self-report and dialog encodings, queried by the graph embedding."""

from __future__ import annotations

from dataclasses import dataclass

from . import autodiff as ad
from .autodiff import Tensor


@dataclass
class FusionParams:
    W1: Tensor  # d3 x d2, applied to the values
    W2: Tensor  # d3 x d1, applied to the query
    v: Tensor  # d3


def attention_scores(s, values, params: FusionParams) -> Tensor:
    query = params.W2 @ ad.as_tensor(s)
    scores = [params.v @ ad.tanh(params.W1 @ ad.as_tensor(h) + query) for h in values]
    return ad.concat([e.reshape(1) for e in scores])


def fuse(s, h1, h2, params: FusionParams) -> tuple[Tensor, Tensor]:
    """Return (alpha, context) with ``context = alpha[0] * h1 + alpha[1] * h2``."""
    alpha = ad.softmax(attention_scores(s, (h1, h2), params))
    context = alpha[0] * ad.as_tensor(h1) + alpha[1] * ad.as_tensor(h2)
    return alpha, context
