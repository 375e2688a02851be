"""Trainable parameter container for every model variant."""

from __future__ import annotations

import hashlib
from typing import Iterator

import numpy as np

from .autodiff import Tensor, parameter
from .classifier import HeadParams
from .config import FUSION_VARIANTS, GRAPH_VARIANTS, LINEAR_VARIANTS, ModelConfig
from .fusion import FusionParams
from .gnn import GatHead, GatLayer, GatParams, NodeEmbeddingTable


def vocab_hash(symptoms, diseases) -> str:
    h = hashlib.sha256()
    for part in (symptoms, diseases):
        h.update("\x1f".join(part).encode("utf-8"))
        h.update(b"\x1e")
    return h.hexdigest()[:16]


class Model:
    def __init__(
        self,
        cfg: ModelConfig,
        variant: str,
        symptoms: list[str],
        diseases: list[str],
        group_map: dict[str, str] | None = None,
        seed: int = 0,
    ):
        if variant == "hierarchical" and not group_map:
            raise ValueError("hierarchical variant needs a disease -> group map")
        self.cfg = cfg
        self.variant = variant
        self.symptoms = list(symptoms)
        self.diseases = list(diseases)
        self.group_map = dict(group_map) if group_map else None
        self.seed = seed
        self.params: dict[str, Tensor] = {}
        self._init_params(np.random.default_rng(seed))

    # -- construction -------------------------------------------------
    def _add(self, name: str, value: np.ndarray) -> Tensor:
        t = parameter(value, name=name)
        self.params[name] = t
        return t

    @staticmethod
    def _glorot(rng, shape) -> np.ndarray:
        fan_out, fan_in = (shape[0], shape[1]) if len(shape) == 2 else (1, shape[0])
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    def _init_params(self, rng: np.random.Generator) -> None:
        c = self.cfg
        d1, d2, d3 = c.d1, c.d2, c.d3
        if self.variant in GRAPH_VARIANTS:
            n_nodes = len(self.symptoms) + len(self.diseases)
            self._add("node_table", rng.normal(0.0, 1.0 / np.sqrt(d1), size=(n_nodes, d1)))
            self._add("dialog_proj", self._glorot(rng, (d1, d2)))
            d_in = d1
            for li in range(c.gat_layers):
                final = li == c.gat_layers - 1
                d_head = d1 if final else c.gat_hidden // c.gat_heads
                for hi in range(c.gat_heads):
                    self._add(f"gat.{li}.{hi}.W", self._glorot(rng, (d_head, d_in)))
                    self._add(f"gat.{li}.{hi}.a", self._glorot(rng, (2 * d_head,)))
                    if c.edge_weight_attention:
                        self._add(f"gat.{li}.{hi}.edge", np.zeros(()))
                d_in = d1 if final else c.gat_hidden
        if self.variant in LINEAR_VARIANTS:
            n_in = len(self.symptoms) * len(self.diseases)
            self._add("linear.W", self._glorot(rng, (d1, n_in)))
            self._add("linear.b", np.zeros(d1))
        if self.variant in FUSION_VARIANTS:
            self._add("fusion.W1", self._glorot(rng, (d3, d2)))
            self._add("fusion.W2", self._glorot(rng, (d3, d1)))
            self._add("fusion.v", self._glorot(rng, (d3,)))
        if self.variant == "hierarchical":
            self._add("group_head.W", self._glorot(rng, (len(self.groups), d1 + d2)))
            self._add("group_head.b", np.zeros(len(self.groups)))
            for g in self.groups:
                n = len(self.group_diseases(g))
                self._add(f"group_heads.{g}.W", self._glorot(rng, (n, d1 + d2)))
                self._add(f"group_heads.{g}.b", np.zeros(n))
        else:
            self._add("head.W", self._glorot(rng, (len(self.diseases), d1 + d2)))
            self._add("head.b", np.zeros(len(self.diseases)))

    # -- views --------------------------------------------------------
    @property
    def groups(self) -> list[str]:
        return sorted(set(self.group_map.values())) if self.group_map else []

    def group_diseases(self, group: str) -> list[str]:
        return [d for d in self.diseases if self.group_map.get(d) == group]

    @property
    def node_table(self) -> NodeEmbeddingTable:
        return NodeEmbeddingTable(self.symptoms + self.diseases, self.params["node_table"])

    @property
    def dialog_proj(self) -> Tensor:
        return self.params["dialog_proj"]

    @property
    def gat(self) -> GatParams:
        c = self.cfg
        layers = []
        for li in range(c.gat_layers):
            heads = [
                GatHead(
                    self.params[f"gat.{li}.{hi}.W"],
                    self.params[f"gat.{li}.{hi}.a"],
                    self.params.get(f"gat.{li}.{hi}.edge"),
                )
                for hi in range(c.gat_heads)
            ]
            layers.append(GatLayer(heads, "mean" if li == c.gat_layers - 1 else "concat"))
        return GatParams(layers, dropout_rate=c.gat_dropout, leaky_slope=c.leaky_slope)

    @property
    def fusion(self) -> FusionParams:
        p = self.params
        return FusionParams(p["fusion.W1"], p["fusion.W2"], p["fusion.v"])

    @property
    def head(self) -> HeadParams:
        return HeadParams(self.params["head.W"], self.params["head.b"], tuple(self.diseases))

    @property
    def group_head(self) -> HeadParams:
        return HeadParams(self.params["group_head.W"], self.params["group_head.b"], tuple(self.groups))

    @property
    def group_heads(self) -> dict[str, HeadParams]:
        return {
            g: HeadParams(
                self.params[f"group_heads.{g}.W"],
                self.params[f"group_heads.{g}.b"],
                tuple(self.group_diseases(g)),
            )
            for g in self.groups
        }

    # -- state --------------------------------------------------------
    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self.params.items())

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        if set(state) != set(self.params):
            raise ValueError("state dict parameter names do not match the model")
        for k, v in state.items():
            if v.shape != self.params[k].shape:
                raise ValueError(f"shape mismatch for {k}: {v.shape} vs {self.params[k].shape}")
            self.params[k].data = np.array(v, dtype=np.float64, copy=True)

    def vocab_hash(self) -> str:
        return vocab_hash(self.symptoms, self.diseases)

    def num_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())
