from __future__ import annotations

import numpy as np
import pytest

from kiddi.corpus import DOCTOR, PATIENT, Corpus, Dialogue, Utterance


def make_dialogue(did, disease, symptom_turns, group=None, texts=None):
    """Patient/doctor alternation; each entry of ``symptom_turns`` is one patient turn's mentions."""
    turns = []
    for i, mentions in enumerate(symptom_turns):
        text = texts[i] if texts else " and ".join(mentions) or "yes"
        intent = "symptom" if mentions else "affirmative"
        turns.append(Utterance(PATIENT, text, intent, tuple(mentions)))
        if i < len(symptom_turns) - 1:
            turns.append(Utterance(DOCTOR, "anything else?"))
    return Dialogue(did, tuple(turns), disease, group)


@pytest.fixture
def toy_corpus() -> Corpus:
    """d1: flu {fever, cough}; d2: flu {fever}; d3: migraine {headache, fever}."""
    dialogues = [
        make_dialogue("d1", "flu", [["fever"], ["cough"]]),
        make_dialogue("d2", "flu", [["fever"]]),
        make_dialogue("d3", "migraine", [["headache", "fever"]]),
    ]
    c = Corpus(dialogues, ["cough", "fever", "headache"], ["flu", "migraine"])
    c.validate()
    return c


def random_corpus(rng: np.random.Generator, max_diseases=8, max_symptoms=20, max_dialogues=50) -> Corpus:
    n_dis = int(rng.integers(1, max_diseases + 1))
    n_sym = int(rng.integers(1, max_symptoms + 1))
    n_dlg = int(rng.integers(1, max_dialogues + 1))
    symptoms = [f"s{i:02d}" for i in range(n_sym)]
    diseases = [f"d{i:02d}" for i in range(n_dis)]
    dialogues = []
    for k in range(n_dlg):
        turns = []
        for _ in range(int(rng.integers(1, 4))):
            m = int(rng.integers(0, 4))
            turns.append([symptoms[j] for j in rng.integers(0, n_sym, size=m)])
        dialogues.append(make_dialogue(f"x{k}", diseases[int(rng.integers(n_dis))], turns))
    c = Corpus(dialogues, symptoms, diseases)
    c.validate()
    return c


def tiny_setup(seed, variant="KI_DDI", n_diseases=3, n_symptoms=4, edge_mode=False):
    """Tiny random knowledge graph, dialogue batch and model (d1 = d2 = 4, d3 = 2)."""
    from kiddi.config import ModelConfig, TrainConfig
    from kiddi.encoder import EncoderConfig
    from kiddi.kgraph import KnowledgeGraph
    from kiddi.model import Model

    rng = np.random.default_rng(seed)
    syms = [f"s{i}" for i in range(n_symptoms)]
    dis = [f"d{i}" for i in range(n_diseases)]
    sd = {(s, d): float(rng.random()) for s in syms for d in dis if rng.random() < 0.6}
    ss = {}
    for a in syms:
        outs = [b for b in syms if b != a and rng.random() < 0.5]
        for b in outs:
            ss[(a, b)] = 1.0 / len(outs)
    kg = KnowledgeGraph(syms, dis, sd, ss)
    groups = {d: ("g0" if i % 2 == 0 else "g1") for i, d in enumerate(dis)}
    dialogues = []
    for k in range(3):
        picked = list(rng.choice(syms, size=int(rng.integers(1, 3)), replace=False))
        dialogues.append(make_dialogue(f"t{k}", dis[k % n_diseases], [[p] for p in picked], group=groups[dis[k % n_diseases]]))
    mcfg = ModelConfig(
        d1=4, d3=2, gat_layers=2, gat_hidden=6, gat_heads=3, gat_dropout=0.5,
        edge_weight_attention=edge_mode, encoder=EncoderConfig(dim=4, seed=seed),
    )
    tcfg = TrainConfig(variant=variant, K=int(rng.integers(1, 3)), seed=seed)
    model = Model(mcfg, variant, syms, dis, groups, seed=seed)
    if edge_mode:
        for name, p in model.named_parameters():
            if name.endswith(".edge"):
                p.data = np.asarray(rng.normal())
    return kg, dialogues, model, tcfg


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
