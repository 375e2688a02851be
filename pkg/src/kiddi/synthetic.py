"""Synthetic diagnosis dialogues with disease signature symptoms.

Each disease owns a few private symptoms and borrows some shared ones. A
dialogue states one signature symptom in the self-report and confirms a few
more in later turns; with probability ``noise`` one off-signature symptom is
mixed in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import (
    DOCTOR,
    INTENT_AFFIRMATIVE,
    INTENT_SYMPTOM,
    PATIENT,
    Corpus,
    Dialogue,
    Utterance,
)

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z")
_VOWELS = ("a", "e", "i", "o", "u")

_SELF_REPORTS = (
    "Hello doctor, I have been suffering from {s} for a few days.",
    "Hi, I have {s} since last week.",
    "Doctor, my main problem is {s}.",
)
_QUESTIONS = ("Do you also have {s}?", "Any {s}?", "Have you noticed {s}?")
_CONFIRMS = ("Yes, I have {s} too.", "Yes, there is some {s}.")
_AFFIRMS = ("Yes.", "Yes, I do.", "Right.")


@dataclass(frozen=True)
class SyntheticSpec:
    num_diseases: int = 10
    num_symptoms: int = 40
    num_dialogues: int = 500
    noise: float = 0.1
    seed: int = 0
    num_groups: int = 3

    def __post_init__(self):
        if self.num_diseases < 1:
            raise ValueError("num_diseases must be >= 1")
        if self.num_symptoms < 3:
            raise ValueError("num_symptoms must be >= 3 so every signature has 3 symptoms")
        if self.num_dialogues < 0:
            raise ValueError("num_dialogues must be >= 0")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")
        if self.num_groups < 1:
            raise ValueError("num_groups must be >= 1")


@dataclass
class SyntheticCorpus:
    corpus: Corpus
    signatures: dict[str, list[str]]
    surface: dict[str, str]

    def lexicon(self) -> dict[str, str]:
        return {form: sid for sid, form in self.surface.items()}


def _surface_forms(n: int, rng: np.random.Generator) -> list[str]:
    """Distinct two-word pseudo symptom names such as 'kori tavem'."""
    forms: list[str] = []
    seen: set[str] = set()
    while len(forms) < n:
        words = []
        for n_syll in rng.integers(2, 4, size=2):
            words.append("".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(n_syll)))
        form = " ".join(words)
        if form not in seen:
            seen.add(form)
            forms.append(form)
    return forms


def _signatures(symptoms: list[str], diseases: list[str], rng) -> dict[str, list[str]]:
    n_private = 2 if len(symptoms) >= 2 * len(diseases) + 1 else 0
    private_end = n_private * len(diseases)
    shared = symptoms[private_end:]
    sigs = {}
    for i, d in enumerate(diseases):
        own = symptoms[i * n_private : (i + 1) * n_private]
        size = int(rng.integers(3, 7))
        n_shared = min(max(size - len(own), 1), len(shared))
        picked = rng.choice(len(shared), size=n_shared, replace=False)
        sigs[d] = own + [shared[j] for j in sorted(picked)]
    return sigs


def generate(spec: SyntheticSpec) -> SyntheticCorpus:
    rng = np.random.default_rng(spec.seed)
    symptoms = [f"sym_{i:03d}" for i in range(spec.num_symptoms)]
    diseases = [f"dis_{i:03d}" for i in range(spec.num_diseases)]
    n_groups = min(spec.num_groups, spec.num_diseases)
    group_map = {d: f"grp_{i % n_groups}" for i, d in enumerate(diseases)}
    surface = dict(zip(symptoms, _surface_forms(len(symptoms), rng)))
    sigs = _signatures(symptoms, diseases, rng)

    dialogues = []
    for n in range(spec.num_dialogues):
        disease = diseases[int(rng.integers(len(diseases)))]
        sig = sigs[disease]
        order = [sig[j] for j in rng.permutation(len(sig))]
        explicit, rest = order[0], order[1:]
        implicit = rest[: int(rng.integers(1, 5))]
        if rng.random() < spec.noise:
            off = [s for s in symptoms if s not in sig]
            if off:
                implicit.append(off[int(rng.integers(len(off)))])
                implicit = [implicit[j] for j in rng.permutation(len(implicit))]

        turns = [
            Utterance(
                PATIENT,
                _SELF_REPORTS[int(rng.integers(len(_SELF_REPORTS)))].format(s=surface[explicit]),
                INTENT_SYMPTOM,
                (explicit,),
            )
        ]
        for s in implicit:
            q = _QUESTIONS[int(rng.integers(len(_QUESTIONS)))].format(s=surface[s])
            turns.append(Utterance(DOCTOR, q, None, (s,)))
            if rng.random() < 0.5:
                reply = _CONFIRMS[int(rng.integers(len(_CONFIRMS)))].format(s=surface[s])
                turns.append(Utterance(PATIENT, reply, INTENT_SYMPTOM, (s,)))
            else:
                turns.append(Utterance(PATIENT, _AFFIRMS[int(rng.integers(len(_AFFIRMS)))], INTENT_AFFIRMATIVE))
        turns.append(Utterance(DOCTOR, "Thank you, let me review your symptoms."))
        dialogues.append(Dialogue(f"syn-{n:05d}", tuple(turns), disease, group_map[disease]))

    corpus = Corpus(dialogues, symptoms, diseases, group_map)
    corpus.validate()
    return SyntheticCorpus(corpus, sigs, surface)


def nearest_signature(symptoms: list[str], signatures: dict[str, list[str]]) -> str:
    """Disease whose signature has the highest Jaccard overlap with ``symptoms``; ties by id."""
    observed = set(symptoms)

    def score(d: str) -> float:
        sig = set(signatures[d])
        return len(observed & sig) / len(observed | sig)

    return min(signatures, key=lambda d: (-score(d), d))
