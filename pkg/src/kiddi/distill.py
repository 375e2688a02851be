"""Per-dialogue knowledge subgraph selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .kgraph import KnowledgeGraph, top_k_diseases

SS = "ss"
SD = "sd"


@dataclass
class Subgraph:
    symptom_nodes: list[str] = field(default_factory=list)
    disease_nodes: list[str] = field(default_factory=list)
    # (src, dst, weight, kind)
    edges: list[tuple[str, str, float, str]] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.symptom_nodes

    def edge_set(self) -> set[tuple[str, str, float, str]]:
        return set(self.edges)

    def to_json(self, dialogue_id: str | None = None) -> dict:
        obj: dict = {
            "symptoms": list(self.symptom_nodes),
            "diseases": list(self.disease_nodes),
            "sd": [{"s": a, "d": b, "w": w} for a, b, w, k in self.edges if k == SD],
            "ss": [{"src": a, "dst": b, "w": w} for a, b, w, k in self.edges if k == SS],
        }
        if dialogue_id is not None:
            obj["dialogue_id"] = dialogue_id
        return obj

    def dumps(self, dialogue_id: str | None = None) -> str:
        return json.dumps(self.to_json(dialogue_id), ensure_ascii=False)


def distill(kg: KnowledgeGraph, symptoms: Sequence[str], K: int) -> Subgraph:
    """Keep symptom-symptom edges among ``symptoms`` and each symptom's top-K diseases.

    Symptoms unknown to the graph are dropped; known symptoms without any
    edge stay as isolated nodes.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    present: list[str] = []
    for s in symptoms:
        if kg.has_symptom(s) and s not in present:
            present.append(s)

    edges: list[tuple[str, str, float, str]] = []
    for i, si in enumerate(present):
        out = kg.ss_out(si)
        for j, sj in enumerate(present):
            if i != j and sj in out:
                edges.append((si, sj, out[sj], SS))

    diseases: dict[str, None] = {}
    for s in present:
        for d, w in top_k_diseases(kg, s, K):
            edges.append((s, d, w, SD))
            diseases.setdefault(d, None)
    return Subgraph(present, list(diseases), edges)
