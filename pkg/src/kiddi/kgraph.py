"""Symptom-symptom-disease knowledge graph weighted by sf-idf.

Co-occurrence is counted once per dialogue over its deduplicated symptom
set. Symptom-disease weights are ``sf(s, d) * idf(s)`` with a natural log;
symptom-symptom weights are the pair count normalized by the source
symptom's row total, so they are directed.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

from .corpus import Corpus


class GraphError(ValueError):
    pass


@dataclass
class CooccurrenceCounts:
    n_sd: dict[tuple[str, str], int]
    # unordered pairs stored once, keyed in symptom-vocabulary order
    n_ss: dict[tuple[str, str], int]
    disease_totals: dict[str, int]
    symptom_row_totals: dict[str, int]
    diseases_containing: dict[str, int]
    num_diseases: int

    def pair_count(self, a: str, b: str) -> int:
        return self.n_ss.get((a, b), 0) or self.n_ss.get((b, a), 0)


def count_cooccurrence(corpus: Corpus) -> CooccurrenceCounts:
    order = {s: i for i, s in enumerate(corpus.symptom_vocab)}
    n_sd: Counter = Counter()
    n_ss: Counter = Counter()
    for dlg in corpus.dialogues:
        present = sorted(set(dlg.symptom_set()), key=lambda s: (order.get(s, len(order)), s))
        for s in present:
            n_sd[(s, dlg.disease_label)] += 1
        for a, b in combinations(present, 2):
            n_ss[(a, b)] += 1

    disease_totals: Counter = Counter()
    containing: Counter = Counter()
    for (s, d), n in n_sd.items():
        disease_totals[d] += n
        containing[s] += 1
    row_totals: Counter = Counter()
    for (a, b), n in n_ss.items():
        row_totals[a] += n
        row_totals[b] += n
    return CooccurrenceCounts(
        n_sd=dict(n_sd),
        n_ss=dict(n_ss),
        disease_totals=dict(disease_totals),
        symptom_row_totals=dict(row_totals),
        diseases_containing=dict(containing),
        num_diseases=len(corpus.disease_vocab),
    )


def sf(s: str, d: str, counts: CooccurrenceCounts) -> float:
    total = counts.disease_totals.get(d, 0)
    if total <= 0:
        raise GraphError(f"disease {d!r} co-occurs with no symptom")
    return counts.n_sd.get((s, d), 0) / total


def idf(s: str, counts: CooccurrenceCounts) -> float:
    n = counts.diseases_containing.get(s, 0)
    if n < 1:
        raise GraphError(f"symptom {s!r} does not occur in the corpus")
    return math.log(counts.num_diseases / n)


@dataclass
class KnowledgeGraph:
    symptoms: list[str]
    diseases: list[str]
    sd_edges: dict[tuple[str, str], float]
    ss_edges: dict[tuple[str, str], float]
    _ranked: dict[str, list[tuple[str, float]]] = field(
        default=None, init=False, repr=False, compare=False
    )
    _ss_out: dict[str, dict[str, float]] = field(default=None, init=False, repr=False, compare=False)
    _symptom_set: frozenset = field(default=None, init=False, repr=False, compare=False)

    def ranked_diseases(self, s: str) -> list[tuple[str, float]]:
        if self._ranked is None:
            ranked: dict[str, list[tuple[str, float]]] = defaultdict(list)
            for (sym, dis), w in self.sd_edges.items():
                ranked[sym].append((dis, w))
            for sym in ranked:
                ranked[sym].sort(key=lambda dw: (-dw[1], dw[0]))
            self._ranked = dict(ranked)
        return self._ranked.get(s, [])

    def ss_out(self, s: str) -> dict[str, float]:
        if self._ss_out is None:
            out: dict[str, dict[str, float]] = defaultdict(dict)
            for (a, b), w in self.ss_edges.items():
                out[a][b] = w
            self._ss_out = dict(out)
        return self._ss_out.get(s, {})

    def has_symptom(self, s: str) -> bool:
        if self._symptom_set is None:
            self._symptom_set = frozenset(self.symptoms)
        return s in self._symptom_set

    def to_json(self) -> dict:
        sidx = {s: i for i, s in enumerate(self.symptoms)}
        didx = {d: i for i, d in enumerate(self.diseases)}
        sd = sorted(self.sd_edges.items(), key=lambda kv: (sidx[kv[0][0]], didx[kv[0][1]]))
        ss = sorted(self.ss_edges.items(), key=lambda kv: (sidx[kv[0][0]], sidx[kv[0][1]]))
        return {
            "symptoms": list(self.symptoms),
            "diseases": list(self.diseases),
            "sd": [{"s": s, "d": d, "w": w} for (s, d), w in sd],
            "ss": [{"src": a, "dst": b, "w": w} for (a, b), w in ss],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "KnowledgeGraph":
        try:
            return cls(
                symptoms=list(obj["symptoms"]),
                diseases=list(obj["diseases"]),
                sd_edges={(e["s"], e["d"]): float(e["w"]) for e in obj["sd"]},
                ss_edges={(e["src"], e["dst"]): float(e["w"]) for e in obj["ss"]},
            )
        except (KeyError, TypeError) as exc:
            raise GraphError(f"malformed graph JSON: {exc}") from None


def build_graph(corpus: Corpus) -> KnowledgeGraph:
    if len(corpus) == 0:
        raise GraphError("cannot build a knowledge graph from an empty corpus")
    counts = count_cooccurrence(corpus)
    sd_edges = {(s, d): sf(s, d, counts) * idf(s, counts) for (s, d) in counts.n_sd}
    ss_edges: dict[tuple[str, str], float] = {}
    for (a, b), n in counts.n_ss.items():
        ss_edges[(a, b)] = n / counts.symptom_row_totals[a]
        ss_edges[(b, a)] = n / counts.symptom_row_totals[b]
    return KnowledgeGraph(
        symptoms=list(corpus.symptom_vocab),
        diseases=list(corpus.disease_vocab),
        sd_edges=sd_edges,
        ss_edges=ss_edges,
    )


def top_k_diseases(kg: KnowledgeGraph, s: str, k: int) -> list[tuple[str, float]]:
    """Strongest diseases for ``s``; ties go to the smaller disease identifier."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return kg.ranked_diseases(s)[:k]


def save_graph(kg: KnowledgeGraph, path: str | Path, meta: dict | None = None) -> None:
    obj = kg.to_json()
    if meta is not None:
        obj["meta"] = meta
    text = json.dumps(obj, indent=1, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_graph(path: str | Path) -> KnowledgeGraph:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: malformed JSON ({exc.msg})") from None
    return KnowledgeGraph.from_json(obj)
