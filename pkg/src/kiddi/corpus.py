"""Annotated diagnosis dialogues: loading, validation, splitting, serialization."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

PATIENT = "patient"
DOCTOR = "doctor"
INTENT_SYMPTOM = "symptom"
INTENT_AFFIRMATIVE = "affirmative"

SR_START = "[sr_start]"
SR_END = "[sr_end]"
PAT = "[pat]"
DOC = "[doc]"

SELF_REPORT = "self_report"
FULL_DIALOG = "full_dialog"

_TOKEN_RE = re.compile(r"[^\W_]+")


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus input."""


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str
    intent: str | None = None
    symptom_mentions: tuple[str, ...] = ()

    def validate(self) -> None:
        if self.speaker not in (PATIENT, DOCTOR):
            raise CorpusError(f"unknown speaker {self.speaker!r}")
        if self.intent is None:
            return
        if self.speaker != PATIENT:
            raise CorpusError("intent is only allowed on patient turns")
        if self.intent == INTENT_SYMPTOM:
            if not self.symptom_mentions:
                raise CorpusError("intent 'symptom' requires at least one symptom mention")
        elif self.intent == INTENT_AFFIRMATIVE:
            if self.symptom_mentions:
                raise CorpusError("intent 'affirmative' must not carry symptom mentions")
        else:
            raise CorpusError(f"unknown intent {self.intent!r}")


@dataclass(frozen=True)
class Dialogue:
    id: str
    turns: tuple[Utterance, ...]
    disease_label: str
    group_label: str | None = None

    @property
    def self_report(self) -> str:
        return self.turns[0].text if self.turns else ""

    def validate(self) -> None:
        if not self.turns:
            raise CorpusError(f"dialogue {self.id!r} has no turns")
        for i, turn in enumerate(self.turns):
            expected = PATIENT if i % 2 == 0 else DOCTOR
            if turn.speaker != expected:
                raise CorpusError(
                    f"dialogue {self.id!r}: turn {i} should be spoken by {expected}, got {turn.speaker}"
                )
            turn.validate()

    def symptom_set(self) -> list[str]:
        """All annotated symptoms, deduplicated in first-mention order."""
        seen: dict[str, None] = {}
        for turn in self.turns:
            for s in turn.symptom_mentions:
                seen.setdefault(s, None)
        return list(seen)


@dataclass
class Corpus:
    dialogues: list[Dialogue]
    symptom_vocab: list[str]
    disease_vocab: list[str]
    group_map: dict[str, str] | None = None
    _symptom_set: frozenset = field(init=False, repr=False, compare=False)
    _disease_set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._symptom_set = frozenset(self.symptom_vocab)
        self._disease_set = frozenset(self.disease_vocab)

    def __len__(self) -> int:
        return len(self.dialogues)

    def validate(self) -> None:
        for name, vocab in (("symptom", self.symptom_vocab), ("disease", self.disease_vocab)):
            if len(set(vocab)) != len(vocab):
                raise CorpusError(f"{name} vocabulary has duplicates")
        if self.group_map is not None:
            missing = [d for d in self.disease_vocab if d not in self.group_map]
            if missing:
                raise CorpusError(f"group map does not cover diseases: {missing[:5]}")
        for dlg in self.dialogues:
            self.check_dialogue(dlg)

    def check_dialogue(self, dlg: Dialogue) -> None:
        dlg.validate()
        if dlg.disease_label not in self._disease_set:
            raise CorpusError(f"dialogue {dlg.id!r}: unknown disease {dlg.disease_label!r}")
        for turn in dlg.turns:
            for s in turn.symptom_mentions:
                if s not in self._symptom_set:
                    raise CorpusError(f"dialogue {dlg.id!r}: unknown symptom {s!r}")

    def subset(self, dialogues: Sequence[Dialogue]) -> "Corpus":
        return Corpus(list(dialogues), self.symptom_vocab, self.disease_vocab, self.group_map)

    @property
    def groups(self) -> list[str]:
        if self.group_map is None:
            return []
        return sorted(set(self.group_map.values()))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for dlg in self.dialogues:
            h.update(dlg.id.encode("utf-8"))
            h.update(b"\0")
        return h.hexdigest()[:16]


def _utterance_from_json(obj: dict) -> Utterance:
    if not isinstance(obj, dict) or "speaker" not in obj:
        raise CorpusError("turn must be an object with a 'speaker'")
    return Utterance(
        speaker=obj["speaker"],
        text=obj.get("text", ""),
        intent=obj.get("intent"),
        symptom_mentions=tuple(obj.get("symptoms") or ()),
    )


def _dialogue_from_json(obj: dict, group_map: dict[str, str] | None) -> Dialogue:
    for key in ("id", "disease", "turns"):
        if key not in obj:
            raise CorpusError(f"missing field {key!r}")
    group = obj.get("group")
    if group is None and group_map is not None:
        group = group_map.get(obj["disease"])
    return Dialogue(
        id=str(obj["id"]),
        turns=tuple(_utterance_from_json(t) for t in obj["turns"]),
        disease_label=obj["disease"],
        group_label=group,
    )


def load_corpus(path: str | Path) -> Corpus:
    """Read a JSONL corpus; the optional first record declares vocabularies."""
    path = Path(path)
    header = None
    known: tuple[frozenset, frozenset] | None = None
    dialogues: list[Dialogue] = []
    n_records = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            n_records += 1
            if n_records == 1 and isinstance(obj, dict) and "vocab" in obj:
                header = obj["vocab"]
                known = (frozenset(header.get("symptoms", [])), frozenset(header.get("diseases", [])))
                continue
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: record must be a JSON object")
            group_map = header.get("groups") if header else None
            try:
                dlg = _dialogue_from_json(obj, group_map)
                dlg.validate()
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            dialogues.append(dlg)
            if known is not None:
                _check_against_header(dlg, *known, f"{path}:{lineno}")
    if n_records == 0:
        raise CorpusError(f"{path}: empty corpus file")

    if header is not None:
        symptoms = list(header.get("symptoms", []))
        diseases = list(header.get("diseases", []))
        group_map = dict(header["groups"]) if header.get("groups") else None
    else:
        symptoms = sorted({s for d in dialogues for t in d.turns for s in t.symptom_mentions})
        diseases = sorted({d.disease_label for d in dialogues})
        groups = {d.disease_label: d.group_label for d in dialogues if d.group_label is not None}
        group_map = groups if groups and len(groups) == len(diseases) else None
    corpus = Corpus(dialogues, symptoms, diseases, group_map)
    corpus.validate()
    return corpus


def _check_against_header(dlg: Dialogue, sym: frozenset, dis: frozenset, where: str) -> None:
    if dlg.disease_label not in dis:
        raise CorpusError(f"{where}: unknown disease {dlg.disease_label!r}")
    for turn in dlg.turns:
        for s in turn.symptom_mentions:
            if s not in sym:
                raise CorpusError(f"{where}: unknown symptom {s!r}")


def dialogue_to_json(dlg: Dialogue) -> dict:
    rec: dict = {"id": dlg.id, "disease": dlg.disease_label}
    if dlg.group_label is not None:
        rec["group"] = dlg.group_label
    turns = []
    for t in dlg.turns:
        obj: dict = {"speaker": t.speaker, "text": t.text}
        if t.intent is not None:
            obj["intent"] = t.intent
        if t.symptom_mentions:
            obj["symptoms"] = list(t.symptom_mentions)
        turns.append(obj)
    rec["turns"] = turns
    return rec


def save_corpus(corpus: Corpus, path: str | Path, meta: dict | None = None) -> None:
    """Write the vocabulary header and one record per dialogue; ``meta`` rides in the header."""
    vocab: dict = {"symptoms": list(corpus.symptom_vocab), "diseases": list(corpus.disease_vocab)}
    if corpus.group_map is not None:
        vocab["groups"] = dict(corpus.group_map)
    with Path(path).open("w", encoding="utf-8") as fh:
        header: dict = {"vocab": vocab}
        if meta is not None:
            header["meta"] = meta
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for dlg in corpus.dialogues:
            fh.write(json.dumps(dialogue_to_json(dlg), ensure_ascii=False) + "\n")


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Floor-based (train, val, test) sizes; leftover rows go to train."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be three non-negative fractions summing to 1, got {ratios}")
    # guard against 0.1 * 30 landing on 2.9999999
    n_val = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    return n - n_val - n_test, n_val, n_test


def split_corpus(
    corpus: Corpus, ratios: Sequence[float] = (0.7, 0.1, 0.2), seed: int = 0
) -> tuple[Corpus, Corpus, Corpus]:
    n = len(corpus)
    if n == 0:
        raise ValueError("cannot split an empty corpus")
    sizes = split_sizes(n, ratios)
    for size, ratio, name in zip(sizes, ratios, ("train", "validation", "test")):
        if ratio > 0 and size == 0 and n * ratio >= 1:
            raise ValueError(f"{name} split is empty")
    perm = np.random.default_rng(seed).permutation(n)
    n_train, n_val, _ = sizes
    parts = (perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :])
    return tuple(corpus.subset([corpus.dialogues[i] for i in idx]) for idx in parts)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def serialize_dialogue(dialogue: Dialogue, mode: str = FULL_DIALOG, max_tokens: int = 512) -> list[str]:
    """Marker-delimited token sequence fed to the encoder, truncated from the end."""
    if max_tokens < 8:
        raise ValueError("max_tokens must be at least 8")
    if mode == SELF_REPORT:
        tokens = [SR_START, *tokenize(dialogue.self_report), SR_END]
    elif mode == FULL_DIALOG:
        tokens = []
        for turn in dialogue.turns:
            tokens.append(PAT if turn.speaker == PATIENT else DOC)
            tokens.extend(tokenize(turn.text))
    else:
        raise ValueError(f"unknown serialization mode {mode!r}")
    return tokens[:max_tokens]
