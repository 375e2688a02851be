"""Joint graph construction and multi-head graph attention with mean pooling.

Node 0 of a joint graph is the dialog node; symptom nodes follow, then
disease nodes. Attention is computed densely over an adjacency mask since
per-dialogue graphs are small.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .distill import Subgraph

DIALOG = "dialog"
SYMPTOM = "symptom"
DISEASE = "disease"


@dataclass
class JointGraph:
    nodes: list[tuple[str, str]]
    # adjacency[i, j] is True when j sends a message to i (j in N_i)
    adjacency: np.ndarray
    edge_weight: np.ndarray
    node_init: Tensor

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def edges(self) -> list[tuple[int, int]]:
        """Directed (src, dst) pairs, self-loops included."""
        dst, src = np.nonzero(self.adjacency)
        return sorted(zip(src.tolist(), dst.tolist()))


class NodeEmbeddingTable:
    """Learnable vector per symptom/disease identifier."""

    def __init__(self, ids: list[str], weights: Tensor):
        if weights.shape[0] != len(ids):
            raise ValueError("one embedding row per identifier is required")
        self.ids = list(ids)
        self.index = {k: i for i, k in enumerate(self.ids)}
        self.weights = weights

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def rows(self, ids: list[str]) -> Tensor:
        missing = [k for k in ids if k not in self.index]
        if missing:
            raise KeyError(f"no node embedding for {missing}")
        return self.weights[np.array([self.index[k] for k in ids], dtype=np.intp)]


@dataclass
class GatHead:
    W: Tensor
    a: Tensor
    edge_coef: Tensor | None = None

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]


@dataclass
class GatLayer:
    heads: list[GatHead]
    merge: str = "concat"

    @property
    def out_dim(self) -> int:
        d = self.heads[0].out_dim
        return d * len(self.heads) if self.merge == "concat" else d


@dataclass
class GatParams:
    layers: list[GatLayer]
    dropout_rate: float = 0.5
    leaky_slope: float = 0.2
    heads: int = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        self.heads = len(self.layers[0].heads) if self.layers else 0


def build_joint_graph(
    sub: Subgraph,
    dialog_encoding: np.ndarray,
    table: NodeEmbeddingTable,
    proj: Tensor,
) -> JointGraph:
    nodes = [(DIALOG, "")]
    nodes += [(SYMPTOM, s) for s in sub.symptom_nodes]
    nodes += [(DISEASE, d) for d in sub.disease_nodes]
    n = len(nodes)
    pos = {node: i for i, node in enumerate(nodes)}

    adj = np.eye(n, dtype=bool)
    weight = np.zeros((n, n))
    for s in sub.symptom_nodes:
        i = pos[(SYMPTOM, s)]
        adj[i, 0] = adj[0, i] = True
        weight[i, 0] = weight[0, i] = 1.0
    for src, dst, w, kind in sub.edges:
        a = pos[(SYMPTOM, src)]
        b = pos[(SYMPTOM, dst)] if kind == "ss" else pos[(DISEASE, dst)]
        adj[b, a] = adj[a, b] = True
        weight[b, a] = w
        if kind == "sd":
            weight[a, b] = w

    enc = np.asarray(getattr(dialog_encoding, "vector", dialog_encoding), dtype=np.float64)
    if enc.shape != (proj.shape[1],):
        raise ValueError(f"dialog encoding has shape {enc.shape}, projection expects {proj.shape[1]}")
    dialog_row = (proj @ enc).reshape(1, proj.shape[0])
    ids = sub.symptom_nodes + sub.disease_nodes
    init = ad.concat([dialog_row, table.rows(ids)], axis=0) if ids else dialog_row
    return JointGraph(nodes, adj, weight, init)


def _attention_head(
    h: Tensor,
    adjacency: np.ndarray,
    edge_weight: np.ndarray,
    head: GatHead,
    slope: float,
    dropout_mask: np.ndarray | None,
) -> tuple[Tensor, np.ndarray]:
    n = adjacency.shape[0]
    d = head.out_dim
    z = h @ head.W.T
    recv = (z @ head.a[:d]).reshape(n, 1)
    send = (z @ head.a[d:]).reshape(1, n)
    logits = ad.leaky_relu(recv + send, slope)
    if head.edge_coef is not None:
        logits = logits + head.edge_coef * edge_weight
    alpha = ad.masked_softmax(logits, adjacency)
    attn = alpha.data
    if dropout_mask is not None:
        alpha = alpha * dropout_mask
    return ad.leaky_relu(alpha @ z, slope), attn


def gat_layer(
    graph: JointGraph,
    features: Tensor,
    layer: GatLayer,
    *,
    leaky_slope: float = 0.2,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, list[np.ndarray]]:
    """One attention layer; returns merged node features and per-head attention."""
    adj = graph.adjacency
    features = ad.as_tensor(features)
    if not adj.any(axis=1).all():
        raise ValueError("every node needs at least one in-neighbour (add self-loops)")
    outs, attns = [], []
    for head in layer.heads:
        mask = None
        if rng is not None and dropout_rate > 0:
            keep = rng.random(adj.shape) >= dropout_rate
            mask = keep / (1.0 - dropout_rate)
        out, attn = _attention_head(features, adj, graph.edge_weight, head, leaky_slope, mask)
        outs.append(out)
        attns.append(attn)
    if len(outs) == 1:
        return outs[0], attns
    if layer.merge == "concat":
        return ad.concat(outs, axis=1), attns
    total = outs[0]
    for o in outs[1:]:
        total = total + o
    return total * (1.0 / len(outs)), attns


def gat_forward(
    graph: JointGraph,
    params: GatParams,
    *,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, list[list[np.ndarray]]]:
    """Run every layer; dropout applies only when ``rng`` is given (training)."""
    h = graph.node_init
    attentions = []
    for layer in params.layers:
        h, attn = gat_layer(
            graph, h, layer,
            leaky_slope=params.leaky_slope,
            dropout_rate=params.dropout_rate,
            rng=rng,
        )
        attentions.append(attn)
    return h, attentions


def mean_pool(features: Tensor) -> Tensor:
    if features.shape[0] < 1:
        raise ValueError("mean_pool needs at least one node")
    return ad.mean(features, axis=0)
