import numpy as np
import pytest

from kiddi.distill import distill
from kiddi.kgraph import KnowledgeGraph, build_graph

from conftest import random_corpus
from oracles import distill_oracle


def random_graph(rng, max_s=20, max_d=10):
    ns, nd = int(rng.integers(1, max_s + 1)), int(rng.integers(1, max_d + 1))
    syms = [f"s{i:02d}" for i in range(ns)]
    dis = [f"d{i:02d}" for i in range(nd)]
    # coarse weights so ties actually occur
    sd = {(s, d): float(rng.integers(0, 4)) / 4 for s in syms for d in dis if rng.random() < 0.4}
    ss = {(a, b): float(rng.random()) for a in syms for b in syms if a != b and rng.random() < 0.2}
    return KnowledgeGraph(syms, dis, sd, ss)


class TestDistill:
    def test_empty(self, toy_corpus):
        sub = distill(build_graph(toy_corpus), [], 1)
        assert sub.is_empty() and sub.edges == []

    def test_toy_k1(self, toy_corpus):
        sub = distill(build_graph(toy_corpus), ["fever", "cough"], 1)
        got = {(a, b, kind): w for a, b, w, kind in sub.edges}
        assert got.keys() == {
            ("fever", "cough", "ss"),
            ("cough", "fever", "ss"),
            ("fever", "flu", "sd"),
            ("cough", "flu", "sd"),
        }
        assert got[("fever", "cough", "ss")] == 0.5
        assert got[("cough", "fever", "ss")] == 1.0
        assert got[("fever", "flu", "sd")] == 0.0
        assert got[("cough", "flu", "sd")] == pytest.approx(0.231049, abs=1e-6)
        assert sub.symptom_nodes == ["fever", "cough"] and sub.disease_nodes == ["flu"]

    def test_unknown_dropped_isolated_kept(self):
        kg = KnowledgeGraph(["a", "b"], ["x"], {("a", "x"): 1.0}, {})
        sub = distill(kg, ["b", "zzz", "a"], 2)
        assert sub.symptom_nodes == ["b", "a"]
        assert sub.edges == [("a", "x", 1.0, "sd")]

    def test_k_must_be_positive(self, toy_corpus):
        with pytest.raises(ValueError):
            distill(build_graph(toy_corpus), ["fever"], 0)

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_exhaustive_filter(self, seed):
        rng = np.random.default_rng(seed)
        kg = random_graph(rng)
        syms = list(rng.choice(kg.symptoms + ["ghost"], size=int(rng.integers(0, 8))))
        K = int(rng.integers(1, 5))
        sub = distill(kg, syms, K)
        present, edges = distill_oracle(kg, syms, K)
        assert set(sub.symptom_nodes) == present
        assert sub.edge_set() == edges

    @pytest.mark.parametrize("seed", range(5))
    def test_invariants(self, seed):
        rng = np.random.default_rng(100 + seed)
        kg = build_graph(random_corpus(rng))
        syms = list(rng.choice(kg.symptoms, size=min(6, len(kg.symptoms)), replace=False))
        K = int(rng.integers(1, 4))
        sub = distill(kg, syms, K)
        nodes = set(sub.symptom_nodes) | set(sub.disease_nodes)
        for a, b, w, kind in sub.edges:
            assert a in nodes and b in nodes
            assert w == (kg.ss_edges if kind == "ss" else kg.sd_edges)[(a, b)]
        for s in sub.symptom_nodes:
            n_sd = sum(1 for a, _, _, kind in sub.edges if a == s and kind == "sd")
            assert n_sd == min(K, len(kg.ranked_diseases(s)))
        for d in sub.disease_nodes:
            assert any(b == d and kind == "sd" for _, b, _, kind in sub.edges)
        again = distill(kg, sub.symptom_nodes, K)
        assert again.edge_set() == sub.edge_set()

    def test_json(self, toy_corpus):
        sub = distill(build_graph(toy_corpus), ["cough"], 1)
        obj = sub.to_json("d7")
        assert obj["dialogue_id"] == "d7"
        assert obj["sd"] == [{"s": "cough", "d": "flu", "w": sub.edges[0][2]}]
